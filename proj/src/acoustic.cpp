// Copyright (c) 2026 The emotts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "emotts/acoustic.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace emotts {

using ad::Mat;

namespace {

template <class Self, class F>
void visit_fields(Self& c, F&& f) {
  f("vocabulary_size", c.vocabulary_size);
  f("categories", c.categories);
  f("mel_bins", c.mel_bins);
  f("d_enc", c.d_enc);
  f("d_dec", c.d_dec);
  f("d_prenet", c.d_prenet);
  f("mixtures", c.mixtures);
  f("d_global", c.d_global);
  f("d_utt", c.d_utt);
  f("d_local", c.d_local);
  f("conv_kernel", c.conv_kernel);
  f("conv_channels", c.conv_channels);
  f("lambda_local", c.lambda_local);
  f("lambda_utt", c.lambda_utt);
  f("prenet_dropout", c.prenet_dropout);
  f("encoder_dropout", c.encoder_dropout);
  f("conditioning_dropout", c.conditioning_dropout);
  f("max_decode_steps", c.max_decode_steps);
  f("attention_init_step", c.attention_init_step);
  f("sigma_floor", c.sigma_floor);
  f("seed", c.seed);
}

std::string format_value(int v) { return std::to_string(v); }
std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T out{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error("config: cannot parse '" + text + "' for " + key);
  }
  return out;
}

double inverse_softplus(double y) { return std::log(std::expm1(y)); }

// Sum of squared gradient entries over one parameter group.
double group_norm(nn::ParameterStore& store, bool predictors) {
  double acc = 0;
  for (const auto& [name, p] : store.all()) {
    if (is_predictor_parameter(name) != predictors || p.grad().size() == 0) continue;
    acc += p.grad().squaredNorm();
  }
  return std::sqrt(acc);
}

void scale_group(nn::ParameterStore& store, bool predictors, double factor) {
  for (const auto& [name, p] : store.all()) {
    if (is_predictor_parameter(name) != predictors || p.grad().size() == 0) continue;
    p.node()->grad *= factor;
  }
}

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](const char* key, double v) {
    if (!(v > 0)) throw Error(std::string("config: ") + key + " must be positive");
  };
  positive("vocabulary_size", vocabulary_size);
  positive("categories", categories);
  positive("mel_bins", mel_bins);
  positive("d_enc", d_enc);
  positive("d_dec", d_dec);
  positive("d_prenet", d_prenet);
  positive("mixtures", mixtures);
  positive("d_global", d_global);
  positive("d_utt", d_utt);
  positive("d_local", d_local);
  positive("conv_kernel", conv_kernel);
  positive("conv_channels", conv_channels);
  positive("max_decode_steps", max_decode_steps);
  positive("attention_init_step", attention_init_step);
  positive("sigma_floor", sigma_floor);
  if (d_enc % 2 != 0) throw Error("config: d_enc must be even (two GRU directions)");
  if (categories < 2) throw Error("config: need at least two categories");
  if (lambda_local < 0 || lambda_utt < 0) throw Error("config: lambdas must be >= 0");
  for (double rate : {prenet_dropout, encoder_dropout, conditioning_dropout}) {
    if (rate < 0 || rate >= 1) throw Error("config: dropout rates must be in [0, 1)");
  }
}

std::string ModelConfig::to_text() const {
  std::string out;
  visit_fields(*this, [&](const char* key, const auto& v) {
    out += key;
    out += '=';
    out += format_value(v);
    out += '\n';
  });
  return out;
}

bool ModelConfig::set(const std::string& key, const std::string& value) {
  bool found = false;
  visit_fields(*this, [&](const char* k, auto& field) {
    if (key != k) return;
    found = true;
    field = parse_number<std::remove_reference_t<decltype(field)>>(key, value);
  });
  return found;
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config: malformed line '" + line + "'");
    if (!c.set(line.substr(0, eq), line.substr(eq + 1))) {
      throw Error("config: unknown key '" + line.substr(0, eq) + "'");
    }
  }
  return c;
}

ModelConfig small_model_config() {
  ModelConfig c;
  c.d_enc = 32;
  c.d_dec = 64;
  c.d_prenet = 32;
  c.d_global = 8;
  c.d_utt = 8;
  c.d_local = 8;
  c.conv_kernel = 3;
  c.conv_channels = 16;
  c.max_decode_steps = 300;
  return c;
}

// --- model ---------------------------------------------------------------------

AcousticModel::AcousticModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  build();
}

AcousticModel::AcousticModel(const AcousticModel& other) : config_(other.config_) {
  build();
  for (const auto& [name, p] : other.store_.all()) store_.get(name).mutable_value() = p.value();
  prior_means_ = other.prior_means_;
}

AcousticModel& AcousticModel::operator=(const AcousticModel& other) {
  if (this != &other) {
    AcousticModel copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void AcousticModel::build() {
  const ModelConfig& c = config_;
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> init(0.0, 0.3);
  Matrix table(c.vocabulary_size, c.d_enc);
  for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = init(rng);
  embedding_ = store_.add("encoder/embedding", std::move(table));
  enc_conv_ = nn::Conv1d(store_, "encoder/conv", c.d_enc, c.d_enc, c.conv_kernel, rng);
  enc_fwd_ = nn::GRUCell(store_, "encoder/gru_fwd", c.d_enc, c.d_enc / 2, rng);
  enc_bwd_ = nn::GRUCell(store_, "encoder/gru_bwd", c.d_enc, c.d_enc / 2, rng);

  gm_ = GlobalEmbedding(store_, c.categories, c.d_global, rng);
  um_encoder_ = UtteranceEncoder(store_, c.mel_bins, c.conv_channels, c.d_utt, c.conv_kernel,
                                 c.conditioning_dropout, rng);
  um_predictor_ = UtterancePredictor(store_, c.d_enc, c.conv_channels, c.d_utt, c.conv_kernel, rng);
  lm_projection_ = LocalProjection(store_, c.d_local, rng);
  lm_predictor_ = LocalPredictor(store_, c.d_enc, c.conv_channels, c.conv_kernel,
                                 c.conditioning_dropout, rng);

  prenet1_ = nn::Linear(store_, "decoder/prenet1", c.mel_bins, c.d_prenet, rng);
  prenet2_ = nn::Linear(store_, "decoder/prenet2", c.d_prenet, c.d_prenet, rng);
  att_rnn_ = nn::GRUCell(store_, "decoder/attention_rnn", c.d_prenet + c.d_cond(), c.d_dec, rng);
  att_params_ = nn::Linear(store_, "decoder/attention", c.d_dec, 3 * c.mixtures, rng);
  dec_rnn_ = nn::GRUCell(store_, "decoder/decoder_rnn", c.d_dec + c.d_cond(), c.d_dec, rng);
  frame_out_ = nn::Linear(store_, "decoder/frame", c.d_dec + c.d_cond(), c.mel_bins, rng);
  stop_out_ = nn::Linear(store_, "decoder/stop", c.d_dec + c.d_cond(), 1, rng);

  // Start with small steps of roughly attention_init_step phonemes and unit width.
  Mat& w = store_.get("decoder/attention/w").mutable_value();
  Mat& b = store_.get("decoder/attention/b").mutable_value();
  w *= 0.1;
  for (int k = 0; k < c.mixtures; ++k) {
    b(0, k) = inverse_softplus(c.attention_init_step);
    b(0, c.mixtures + k) = inverse_softplus(1.0);
    b(0, 2 * c.mixtures + k) = 0.0;
  }
  // Stop unit begins firmly off.
  store_.get("decoder/stop/b").mutable_value()(0, 0) = -3.0;
}

Var AcousticModel::encode(const PhonemeSequence& phonemes, bool training,
                          std::mt19937_64& rng) const {
  phonemes.validate(config_.vocabulary_size);
  Var x = ad::gather_rows(embedding_, phonemes.ids);
  x = ad::dropout(ad::relu(enc_conv_(x)), config_.encoder_dropout, training, rng);
  const Var parts[] = {nn::run_gru(enc_fwd_, x, false), nn::run_gru(enc_bwd_, x, true)};
  return ad::concat_cols(parts);
}

Var AcousticModel::condition(const Var& encodings, const Var& h_global, const Var& h_utt,
                             const Var& h_local) const {
  const Eigen::Index t = encodings.rows();
  if (encodings.cols() != config_.d_enc) throw Error("condition: encoder width mismatch");
  if (h_global.rows() != 1 || h_global.cols() != config_.d_global) {
    throw Error("condition: h_global must be 1 x " + std::to_string(config_.d_global));
  }
  if (h_utt.rows() != 1 || h_utt.cols() != config_.d_utt) {
    throw Error("condition: h_utt must be 1 x " + std::to_string(config_.d_utt));
  }
  if (h_local.rows() != t || h_local.cols() != config_.d_local) {
    throw Error("condition: h_local must be " + std::to_string(t) + " x " +
                std::to_string(config_.d_local));
  }
  const Var parts[] = {encodings, h_local, ad::repeat_rows(h_global, t),
                       ad::repeat_rows(h_utt, t)};
  return ad::concat_cols(parts);
}

Var AcousticModel::prenet(const Var& frames, bool training, std::mt19937_64& rng) const {
  Var x = ad::dropout(ad::relu(prenet1_(frames)), config_.prenet_dropout, training, rng);
  return ad::dropout(ad::relu(prenet2_(x)), config_.prenet_dropout, training, rng);
}

void AcousticModel::decoder_step(const Var& prenet_row, const Var& memory,
                                 StepState& s) const {
  const int g = config_.mixtures;
  const Var att_in[] = {prenet_row, s.context};
  s.h_att = att_rnn_(ad::concat_cols(att_in), s.h_att);
  const Var p = att_params_(s.h_att);
  s.mu = ad::add(s.mu, ad::softplus(ad::slice_cols(p, 0, g)));
  const Var sigma = ad::add_scalar(ad::softplus(ad::slice_cols(p, g, g)), config_.sigma_floor);
  const Var pi = ad::softmax_rows(ad::slice_cols(p, 2 * g, g));
  const Var w = ad::gmm_weights(pi, s.mu, sigma, memory.rows());
  s.context = ad::matmul(w, memory);
  const Var dec_in[] = {s.h_att, s.context};
  s.h_dec = dec_rnn_(ad::concat_cols(dec_in), s.h_dec);
}

DecoderOutputs AcousticModel::decode_teacher_forced(const Var& memory, const Matrix& target_mel,
                                                    bool training, std::mt19937_64& rng) const {
  const Eigen::Index n = target_mel.rows();
  if (n < 1) throw Error("decode: empty target mel");
  if (target_mel.cols() != config_.mel_bins) throw Error("decode: mel bin mismatch");
  Matrix inputs = Matrix::Zero(n, config_.mel_bins);
  inputs.bottomRows(n - 1) = target_mel.topRows(n - 1);
  const Var pre = prenet(ad::constant(std::move(inputs)), training, rng);

  StepState s{ad::constant(Mat::Zero(1, config_.d_dec)), ad::constant(Mat::Zero(1, config_.d_dec)),
              ad::constant(Mat::Zero(1, config_.d_cond())),
              ad::constant(Mat::Zero(1, config_.mixtures))};
  std::vector<Var> rows;
  rows.reserve(static_cast<std::size_t>(n));
  DecoderOutputs out;
  out.attention_means.resize(n, config_.mixtures);
  for (Eigen::Index t = 0; t < n; ++t) {
    decoder_step(ad::slice_rows(pre, t, 1), memory, s);
    const Var feats[] = {s.h_dec, s.context};
    rows.push_back(ad::concat_cols(feats));
    out.attention_means.row(t) = s.mu.value();
  }
  const Var all = ad::concat_rows(rows);
  out.frames = frame_out_(all);
  out.stop_logits = stop_out_(all);
  return out;
}

Vector AcousticModel::gm_embed(const EmotionPosterior& posterior) const {
  return emotts::gm_embed(gm_.table().value(), posterior);
}

Vector AcousticModel::um_encode(const Matrix& mel) const {
  if (mel.rows() < 1) throw Error("um_encode: empty mel");
  if (mel.cols() != config_.mel_bins) throw Error("um_encode: mel bin mismatch");
  ad::NoGradGuard guard;
  std::mt19937_64 unused;
  return um_encoder_(ad::constant(mel), false, unused).value().transpose();
}

Matrix AcousticModel::encoder_output(const PhonemeSequence& phonemes) const {
  ad::NoGradGuard guard;
  std::mt19937_64 unused;
  return encode(phonemes, false, unused).value();
}

Vector AcousticModel::um_predict(const PhonemeSequence& phonemes) const {
  ad::NoGradGuard guard;
  return um_predictor_(ad::constant(encoder_output(phonemes))).value().transpose();
}

std::vector<double> AcousticModel::lm_predict(const PhonemeSequence& phonemes) const {
  ad::NoGradGuard guard;
  std::mt19937_64 unused;
  const Mat out = lm_predictor_(ad::constant(encoder_output(phonemes)), false, unused).value();
  return std::vector<double>(out.data(), out.data() + out.size());
}

Matrix AcousticModel::lm_project(std::span<const double> per_phoneme_strengths) const {
  if (per_phoneme_strengths.empty()) throw Error("lm_project: empty strength sequence");
  check_strength_range(per_phoneme_strengths);
  ad::NoGradGuard guard;
  return lm_projection_(ad::constant(strengths_column(per_phoneme_strengths))).value();
}

void AcousticModel::check_bundle(const ConditioningBundle& b, Eigen::Index phoneme_count) const {
  if (b.h_global.size() != config_.d_global) throw Error("bundle: h_global dimension mismatch");
  if (b.h_utt.size() != config_.d_utt) throw Error("bundle: h_utt dimension mismatch");
  if (b.h_local.rows() != phoneme_count || b.h_local.cols() != config_.d_local) {
    throw Error("bundle: h_local must be " + std::to_string(phoneme_count) + " x " +
                std::to_string(config_.d_local));
  }
}

Matrix AcousticModel::encode_and_condition(const PhonemeSequence& phonemes,
                                           const ConditioningBundle& bundle) const {
  check_bundle(bundle, static_cast<Eigen::Index>(phonemes.ids.size()));
  ad::NoGradGuard guard;
  std::mt19937_64 unused;
  const Var enc = encode(phonemes, false, unused);
  return condition(enc, ad::constant(bundle.h_global.transpose()),
                   ad::constant(bundle.h_utt.transpose()), ad::constant(bundle.h_local))
      .value();
}

SynthesisResult AcousticModel::synthesize(const PhonemeSequence& phonemes,
                                          const ConditioningBundle& bundle) const {
  const Var memory = ad::constant(encode_and_condition(phonemes, bundle));
  ad::NoGradGuard guard;
  std::mt19937_64 unused;
  StepState s{ad::constant(Mat::Zero(1, config_.d_dec)), ad::constant(Mat::Zero(1, config_.d_dec)),
              ad::constant(Mat::Zero(1, config_.d_cond())),
              ad::constant(Mat::Zero(1, config_.mixtures))};
  std::vector<Eigen::RowVectorXd> frames, means;
  Var prev = ad::constant(Mat::Zero(1, config_.mel_bins));
  SynthesisResult result;
  for (int t = 0; t < config_.max_decode_steps; ++t) {
    decoder_step(prenet(prev, false, unused), memory, s);
    const Var feats[] = {s.h_dec, s.context};
    const Var f = ad::concat_cols(feats);
    prev = frame_out_(f);
    frames.push_back(prev.value().row(0));
    means.push_back(s.mu.value().row(0));
    if (stop_out_(f).scalar() > 0.0) {
      result.stop_step = t;
      break;
    }
  }
  result.overran = result.stop_step < 0;
  result.mel.resize(static_cast<Eigen::Index>(frames.size()), config_.mel_bins);
  result.attention_means.resize(static_cast<Eigen::Index>(means.size()), config_.mixtures);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    result.mel.row(static_cast<Eigen::Index>(i)) = frames[i];
    result.attention_means.row(static_cast<Eigen::Index>(i)) = means[i];
  }
  return result;
}

void AcousticModel::set_prior_mean(int category, Vector mean) {
  if (mean.size() != config_.d_utt) throw Error("prior mean: dimension mismatch");
  if (category < -1 || category >= config_.categories) throw Error("prior mean: bad category");
  prior_means_[category] = std::move(mean);
}

Vector AcousticModel::prior_mean(int category) const {
  if (auto it = prior_means_.find(category); it != prior_means_.end()) return it->second;
  if (auto it = prior_means_.find(-1); it != prior_means_.end()) return it->second;
  throw Error("no prior utterance variation stored; fit prior means after training");
}

Vector um_prior_mean(const AcousticModel& model, std::span<const Utterance> corpus,
                     std::optional<int> category) {
  Vector acc = Vector::Zero(model.config().d_utt);
  int n = 0;
  for (const auto& u : corpus) {
    if (category && u.emotion != *category) continue;
    acc += model.um_encode(u.mel);
    ++n;
  }
  if (n == 0) throw Error("um_prior_mean: empty selection");
  return acc / static_cast<double>(n);
}

void fit_prior_means(AcousticModel& model, std::span<const Utterance> corpus) {
  model.set_prior_mean(-1, um_prior_mean(model, corpus));
  std::vector<bool> seen(static_cast<std::size_t>(model.config().categories), false);
  for (const auto& u : corpus) seen.at(static_cast<std::size_t>(u.emotion)) = true;
  for (int c = 0; c < model.config().categories; ++c) {
    if (seen[static_cast<std::size_t>(c)]) model.set_prior_mean(c, um_prior_mean(model, corpus, c));
  }
}

// --- training ----------------------------------------------------------------------

bool is_predictor_parameter(const std::string& name) {
  return name.starts_with(kUtterancePredictorPrefix) || name.starts_with(kLocalPredictorPrefix);
}

Trainer::Trainer(AcousticModel& model, TrainerOptions options)
    : model_(model),
      options_(options),
      adam_(nn::AdamOptions{.learning_rate = options.learning_rate}),
      rng_(options.seed),
      lambda_local_(model.config().lambda_local),
      lambda_utt_(model.config().lambda_utt) {}

void Trainer::set_lambdas(double lambda_local, double lambda_utt) {
  if (lambda_local < 0 || lambda_utt < 0) throw Error("lambdas must be >= 0");
  lambda_local_ = lambda_local;
  lambda_utt_ = lambda_utt;
}

LossBreakdown Trainer::compute_gradients(std::span<const TrainingExample> batch) {
  if (batch.empty()) throw Error("train_step: empty batch");
  model_.params().zero_grad();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  LossBreakdown out;
  std::vector<Var> totals;
  for (const auto& ex : batch) {
    const Utterance& u = *ex.utterance;
    if (ex.phoneme_strengths.size() != u.phonemes.ids.size()) {
      throw Error("train_step: " + u.id + " strength count does not match phoneme count");
    }
    check_strength_range(ex.phoneme_strengths);
    const Var enc = model_.encode(u.phonemes, true, rng_);
    const Var h_global = model_.global_embedding().lookup(u.emotion);
    const Var h_utt = model_.utterance_encoder()(ad::constant(u.mel), true, rng_);
    const Var strengths = ad::constant(strengths_column(ex.phoneme_strengths));
    const Var h_local = model_.local_projection()(strengths);
    const Var memory = model_.condition(enc, h_global, h_utt, h_local);
    const DecoderOutputs dec = model_.decode_teacher_forced(memory, u.mel, true, rng_);

    const Var mel_loss = ad::mse(dec.frames, ad::constant(u.mel));
    Mat stop_targets = Mat::Zero(u.mel.rows(), 1);
    stop_targets(u.mel.rows() - 1, 0) = 1.0;
    const Var stop_loss = ad::bce_with_logits(dec.stop_logits, stop_targets);
    const Var acoustic = ad::add(mel_loss, stop_loss);

    // Predictors see the encoder and the utterance encoder only through
    // gradient barriers.
    const Var enc_fixed = ad::detach(enc);
    const Var local =
        ad::squared_distance(model_.local_predictor()(enc_fixed, true, rng_), strengths);
    const Var utt = ad::squared_distance(model_.utterance_predictor()(enc_fixed), ad::detach(h_utt));

    const Var total = ad::add(acoustic, ad::add(ad::scale(local, lambda_local_),
                                                ad::scale(utt, lambda_utt_)));
    if (!std::isfinite(total.scalar())) {
      throw Error("non-finite loss on " + u.id + ": mel=" + format_value(mel_loss.scalar()) +
                  " stop=" + format_value(stop_loss.scalar()) +
                  " local=" + format_value(local.scalar()) + " utt=" + format_value(utt.scalar()));
    }
    totals.push_back(total);
    out.mel += mel_loss.scalar() * inv_b;
    out.stop += stop_loss.scalar() * inv_b;
    out.acoustic += acoustic.scalar() * inv_b;
    out.local += local.scalar() * inv_b;
    out.utt += utt.scalar() * inv_b;
  }
  Var sum = totals[0];
  for (std::size_t i = 1; i < totals.size(); ++i) sum = ad::add(sum, totals[i]);
  const Var loss = ad::scale(sum, inv_b);
  ad::backward(loss);
  out.total = out.acoustic + lambda_local_ * out.local + lambda_utt_ * out.utt;
  return out;
}

LossBreakdown Trainer::step(std::span<const TrainingExample> batch) {
  const LossBreakdown losses = compute_gradients(batch);
  if (options_.grad_clip > 0) {
    for (bool predictors : {false, true}) {
      const double norm = group_norm(model_.params(), predictors);
      if (norm > options_.grad_clip) scale_group(model_.params(), predictors, options_.grad_clip / norm);
    }
  }
  adam_.step(model_.params());
  ++steps_;
  return losses;
}

// --- checkpoint --------------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[4] = {'E', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T take(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("checkpoint: truncated " + what);
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream& in, const std::string& what) {
  const auto n = take<std::uint32_t>(in, what);
  if (n > (1u << 24)) throw Error("checkpoint: implausible length for " + what);
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw Error("checkpoint: truncated " + what);
  return s;
}

void put_block(std::ostream& out, const std::string& name, const Mat& m) {
  put_string(out, name);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const AcousticModel& model,
                     std::uint64_t step) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put_string(out, model.config().to_text());
  put<std::uint64_t>(out, step);
  put<std::uint64_t>(out, model.config().seed);
  const auto& params = model.params().all();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size() + model.prior_means().size()));
  for (const auto& [name, p] : params) put_block(out, name, p.value());
  for (const auto& [cat, mean] : model.prior_means()) {
    put_block(out, cat < 0 ? "prior/global" : "prior/" + std::to_string(cat), mean);
  }
  if (!out) throw Error("write failed: " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw Error(path.string() + " is not a checkpoint");
  }
  const auto version = take<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw Error("checkpoint version " + std::to_string(version) + " not supported");
  }
  const ModelConfig config = ModelConfig::from_text(take_string(in, "config"));
  LoadedCheckpoint result{AcousticModel(config), take<std::uint64_t>(in, "step")};
  const auto seed = take<std::uint64_t>(in, "seed");
  if (seed != config.seed) throw Error("checkpoint: seed field disagrees with config");
  const auto blocks = take<std::uint32_t>(in, "block count");
  std::size_t params_seen = 0;
  for (std::uint32_t i = 0; i < blocks; ++i) {
    const std::string name = take_string(in, "block name");
    const auto rows = take<std::uint32_t>(in, name);
    const auto cols = take<std::uint32_t>(in, name);
    Mat m(rows, cols);
    if (!in.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(m.size() * sizeof(double)))) {
      throw Error("checkpoint: truncated block " + name);
    }
    if (name.starts_with("prior/")) {
      const std::string key = name.substr(6);
      result.model.set_prior_mean(key == "global" ? -1 : std::stoi(key), m.col(0));
      continue;
    }
    if (!result.model.params().contains(name)) throw Error("checkpoint: unknown block " + name);
    Mat& dst = result.model.params().get(name).mutable_value();
    if (dst.rows() != m.rows() || dst.cols() != m.cols()) {
      throw Error("checkpoint: shape mismatch for " + name);
    }
    dst = std::move(m);
    ++params_seen;
  }
  if (params_seen != result.model.params().all().size()) {
    throw Error("checkpoint: missing parameter blocks");
  }
  return result;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  LoadedCheckpoint loaded = load_checkpoint(path);
  if (!(loaded.model.config() == expected)) {
    throw Error("checkpoint " + path.string() + " was written with a different model config:\n" +
                loaded.model.config().to_text());
  }
  return loaded;
}

}  // namespace emotts
