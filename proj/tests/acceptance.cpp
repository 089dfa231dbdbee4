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


// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <sstream>

#include "emotts/cli.hpp"
#include "emotts/eval.hpp"
#include "emotts/inference.hpp"
#include "gradcheck.hpp"
#include "ranker_oracle.hpp"
#include "stats_oracle.hpp"

namespace fs = std::filesystem;
using namespace emotts;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int n, const std::string& name, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!v.pass) ++failures;
  std::printf("%s %2d %-28s %8.2fs  %s\n", v.pass ? "PASS" : "FAIL", n, name.c_str(), secs, v.detail.c_str());
  std::fflush(stdout);
}

std::string num(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("emotts_accept_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int cli(const fs::path& dir, std::vector<std::string> args) {
  std::vector<std::string> full{"--corpus", (dir / "corpus").string(), "--run-dir", (dir / "run").string()};
  full.insert(full.end(), args.begin(), args.end());
  std::ostringstream out, err;
  const int code = dispatch(full, out, err);
  if (code != 0) throw Error("cli " + args.back() + " failed: " + err.str());
  return code;
}

double orthonormal_dct(int k, int n, int bins) {
  const double scale = k == 0 ? std::sqrt(1.0 / bins) : std::sqrt(2.0 / bins);
  return scale * std::cos(M_PI * (n + 0.5) * k / bins);
}

ModelConfig quiet(ModelConfig c) {
  c.prenet_dropout = 0.0;
  c.encoder_dropout = 0.0;
  c.conditioning_dropout = 0.0;
  return c;
}

StrengthExtractor fit_extractor(const std::vector<Utterance>& corpus) {
  const int neutral = GeneratorConfig{}.neutral_index();
  StrengthExtractor ex(neutral);
  for (int e = 0; e < static_cast<int>(GeneratorConfig{}.categories.size()); ++e) {
    if (e != neutral) ex.add(fit_emotion_ranker(corpus, e, neutral, RankerOptions{}));
  }
  return ex;
}

// Backbone trained on a small multi-emotion corpus, shared by 4, 8, 10, 11.
struct Shared {
  std::vector<Utterance> corpus;
  StrengthExtractor extractor;
  std::unique_ptr<AcousticModel> model;
};

Shared train_shared(int steps) {
  Shared s;
  GeneratorConfig g;
  g.min_syllables = 4;
  g.max_syllables = 8;
  s.corpus = generate_synthetic_corpus(21, 8, g);
  s.extractor = fit_extractor(s.corpus);
  std::vector<TrainingExample> data;
  for (const auto& u : s.corpus) data.push_back({&u, s.extractor.extract(u).per_phoneme});
  ModelConfig c = quiet(small_model_config());
  c.prenet_dropout = 0.2;
  s.model = std::make_unique<AcousticModel>(c);
  Trainer tr(*s.model, {.learning_rate = 2e-3, .grad_clip = 1.0, .seed = 1});
  std::mt19937_64 rng(3);
  std::vector<TrainingExample> batch;
  for (int i = 0; i < steps; ++i) {
    batch.clear();
    for (int b = 0; b < 8; ++b) batch.push_back(data[rng() % data.size()]);
    tr.step(batch);
  }
  fit_prior_means(*s.model, s.corpus);
  return s;
}

}  // namespace

int main() {
  std::mt19937_64 rng(2024);

  criterion(1, "ranker-vs-grid-oracle", [&] {
    double worst = 0, slowest = 0;
    for (int trial = 0; trial < 20; ++trial) {
      int dim = 0;
      const auto p = testing::random_problem(rng, dim);
      PairSet pairs{p.ordered, p.similar};
      const auto t0 = std::chrono::steady_clock::now();
      const auto m = train_ranker(pairs, p.C, 1e-9, 50);
      slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      worst = std::max(worst, std::abs(p.objective(m.w) - testing::grid_search_minimum(p, dim).objective));
    }
    return Verdict{worst <= 1e-3 && slowest < 1.0,
                   "max |J_newton - J_grid| = " + sci(worst) + ", slowest solve " + sci(slowest) + "s"};
  });

  criterion(2, "ranker-scalar-closed-form", [] {
    PairSet p;
    p.ordered.push_back((Vector(1) << 1.0).finished());
    const double w = train_ranker(p, 1.0, 1e-10, 50).w(0);
    return Verdict{std::abs(w - 2.0 / 3.0) <= 1e-3, "w = " + num(w, 6)};
  });

  criterion(3, "strength-recovery-700", [] {
    const fs::path dir = scratch("c3");
    cli(dir, {"--set", "gen.per_emotion=100", "gen-corpus", "--seed", "31"});
    cli(dir, {"train-ranker"});
    cli(dir, {"extract-strengths"});
    auto corpus = load_corpus(load_manifest(dir / "corpus" / "manifest.tsv"));
    attach_truth(dir / "corpus", corpus);
    std::map<std::string, const Utterance*> by_id;
    for (const auto& u : corpus) by_id[u.id] = &u;
    std::ifstream in(dir / "run" / "strengths.tsv");
    std::string line;
    std::getline(in, line);
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per;
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string id, emotion, values, tok;
      std::getline(row, id, '\t');
      std::getline(row, emotion, '\t');
      std::getline(row, values, '\t');
      if (emotion == "neutral") continue;
      const Utterance& u = *by_id.at(id);
      std::istringstream vs(values);
      for (std::size_t k = 0; std::getline(vs, tok, ','); ++k) {
        per[emotion].first.push_back(std::stod(tok));
        per[emotion].second.push_back(u.truth->strengths.at(k));
      }
    }
    double worst = 1;
    std::string detail = std::to_string(corpus.size()) + " utts;";
    for (const auto& [e, pr] : per) {
      const double rho = testing::spearman(pr.first, pr.second);
      worst = std::min(worst, rho);
      detail += " " + e + "=" + num(rho, 3);
    }
    fs::remove_all(dir);
    return Verdict{corpus.size() == 700 && per.size() == 6 && worst >= 0.8, detail};
  });

  criterion(4, "soft-embedding-identity", [&] {
    AcousticModel m(small_model_config());
    const Matrix table = m.gm_table();
    bool exact = true;
    for (int e = 0; e < table.rows(); ++e) {
      const Vector got = m.gm_embed(EmotionPosterior::one_hot(static_cast<int>(table.rows()), e));
      const Vector row = table.row(e).transpose();
      exact = exact && std::memcmp(got.data(), row.data(), sizeof(double) * static_cast<std::size_t>(row.size())) == 0;
    }
    std::gamma_distribution<double> gam(1.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto draw = [&] {
      Vector p(table.rows());
      for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = gam(rng);
      return EmotionPosterior{p / p.sum()};
    };
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
      const auto p = draw(), q = draw();
      const double a = u(rng);
      const Vector mixed = m.gm_embed({a * p.probs + (1 - a) * q.probs});
      worst = std::max(worst, (mixed - (a * m.gm_embed(p) + (1 - a) * m.gm_embed(q))).cwiseAbs().maxCoeff());
    }
    return Verdict{exact && worst <= 1e-6, std::string("one-hot bitwise ") + (exact ? "yes" : "no") +
                                               ", max linearity error " + sci(worst)};
  });

  criterion(5, "gradient-routing", [] {
    GeneratorConfig g;
    g.min_syllables = 4;
    g.max_syllables = 6;
    const auto corpus = generate_synthetic_corpus(8, 1, g);
    std::vector<TrainingExample> batch;
    for (const auto& u : corpus) batch.push_back({&u, std::vector<double>(u.phonemes.ids.size(), 0.5)});
    AcousticModel with(small_model_config()), without(small_model_config());
    Trainer ta(with, {.seed = 11}), tb(without, {.seed = 11});
    ta.set_lambdas(1.0, 1.0);
    tb.set_lambdas(0.0, 0.0);
    ta.compute_gradients(batch);
    tb.compute_gradients(batch);
    double worst = 0;
    int tensors = 0;
    for (const auto& [name, p] : with.params().all()) {
      if (is_predictor_parameter(name) || p.grad().size() == 0) continue;
      worst = std::max(worst, (p.grad() - without.params().get(name).grad()).cwiseAbs().maxCoeff());
      ++tensors;
    }
    return Verdict{tensors > 10 && worst <= 1e-6,
                   std::to_string(tensors) + " backbone tensors, max diff " + sci(worst)};
  });

  criterion(6, "predictor-finite-differences", [&] {
    AcousticModel m(quiet(small_model_config()));
    std::normal_distribution<double> nd(0.0, 1.0);
    auto randm = [&](Eigen::Index r, Eigen::Index c) {
      Matrix x(r, c);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(rng);
      return x;
    };
    const ad::Var enc = ad::constant(randm(7, m.config().d_enc));
    const ad::Var h_utt = ad::constant(randm(1, m.config().d_utt));
    const ad::Var s = ad::constant(strengths_column(std::vector<double>{0.1, 0.4, 0.4, 0.9, 0.2, 0.6, 0.3}));
    std::mt19937_64 drop(0);
    auto loss = [&] {
      return ad::add(ad::squared_distance(m.utterance_predictor()(enc), h_utt),
                     ad::squared_distance(m.local_predictor()(enc, false, drop), s));
    };
    std::vector<std::string> names;
    for (const auto& [name, p] : m.params().all()) {
      if (is_predictor_parameter(name)) names.push_back(name);
    }
    m.params().zero_grad();
    ad::backward(loss());
    double worst = 0;
    for (int t = 0; t < 10; ++t) {
      ad::Var& p = m.params().get(names[rng() % names.size()]);
      const auto idx = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(p.value().size()));
      const double analytic = p.grad().data()[idx];
      const double numeric = testing::central_difference(p, idx, [&] { return loss().scalar(); });
      worst = std::max(worst, testing::relative_error(analytic, numeric, 1e-6));
    }
    return Verdict{worst <= 1e-4, "10 coordinates, max relative error " + sci(worst)};
  });

  criterion(7, "single-utterance-overfit", [] {
    GeneratorConfig g;
    g.min_syllables = 6;
    g.max_syllables = 6;
    const auto corpus = generate_synthetic_corpus(5, 6, g);
    const StrengthExtractor ex = fit_extractor(corpus);
    const Utterance& u = corpus[1];
    AcousticModel m(quiet(small_model_config()));
    Trainer tr(m, {.learning_rate = 5e-3, .seed = 1});
    const TrainingExample example{&u, ex.extract(u).per_phoneme};
    double initial = 0, last = 0;
    int steps = 0;
    while (steps < 1000 && (steps < 200 || last >= 0.01 * initial)) {
      last = tr.step(std::span(&example, 1)).acoustic;
      if (steps++ == 0) initial = last;
    }
    const double mcd = mcd_dtw(synth_transfer(m, ex, TargetText::from_utterance(u), u).mel, u.mel);
    return Verdict{last < 0.01 * initial && mcd < 1.0,
                   std::to_string(steps) + " steps, loss ratio " + num(last / initial, 5) + ", MCD " +
                       num(mcd, 3) + " dB"};
  });

  criterion(9, "mcd-unit-checks", [&] {
    Matrix x(15, 20), one(1, 20);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < one.size(); ++i) one.data()[i] = u(rng);
    Matrix shifted = one;
    for (int n = 0; n < 20; ++n) shifted(0, n) += orthonormal_dct(1, n, 20);
    Matrix doubled(30, 20);
    for (Eigen::Index t = 0; t < 15; ++t) doubled.row(2 * t) = doubled.row(2 * t + 1) = x.row(t);
    const double self = mcd_dtw(x, x), single = mcd_dtw(one, shifted), dup = mcd_dtw(x, doubled);
    const double expect = 10.0 / std::log(10.0) * std::sqrt(2.0);
    return Verdict{self == 0.0 && std::abs(single - expect) <= 1e-4 && std::abs(single - 6.1418) <= 1e-4 && dup == 0.0,
                   "self " + num(self, 6) + ", single-frame " + num(single, 6) + ", duplicated " + num(dup, 6)};
  });

  criterion(12, "strength-interpolation", [&] {
    const bool three = interpolate_strengths(std::vector<double>{0.0, 1.0}, 3) == std::vector<double>{0.0, 0.5, 1.0};
    bool identity = true;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 1; k <= 25; ++k) {
      std::vector<double> v(static_cast<std::size_t>(k));
      for (double& x : v) x = u(rng);
      identity = identity && interpolate_strengths(v, k) == v;
    }
    return Verdict{three && identity, std::string("[0,1]->3 exact ") + (three ? "yes" : "no") +
                                          ", identity " + (identity ? "yes" : "no")};
  });

  const char* steps_env = std::getenv("EMOTTS_ACCEPT_STEPS");
  const int shared_steps = steps_env ? std::atoi(steps_env) : 1200;
  const auto t_train = std::chrono::steady_clock::now();
  Shared shared = train_shared(shared_steps);
  std::printf("---- shared backbone: %d steps on %zu utterances, %.1fs\n", shared_steps, shared.corpus.size(),
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t_train).count());

  criterion(8, "attention-monotonicity", [&] {
    long violations = 0, steps = 0;
    int decodes = 0;
    for (const auto& u : shared.corpus) {
      if (decodes == 50) break;
      const auto text = TargetText::from_utterance(u);
      const auto r = u.emotion == shared.extractor.neutral()
                         ? synth_control(*shared.model, text, {u.emotion, StrengthSpec::ramp_up(), {}, {}})
                         : synth_transfer(*shared.model, shared.extractor, text, u);
      for (Eigen::Index t = 1; t < r.attention_means.rows(); ++t) {
        violations += (r.attention_means.row(t).array() < r.attention_means.row(t - 1).array()).count();
      }
      steps += r.attention_means.rows();
      ++decodes;
    }
    return Verdict{decodes == 50 && violations == 0, std::to_string(decodes) + " decodes, " +
                                                         std::to_string(steps) + " steps, " +
                                                         std::to_string(violations) + " violations"};
  });

  criterion(10, "syllable-vs-sentence-mcd", [&] {
    double syl = 0, sen = 0;
    int n = 0;
    for (const auto& u : shared.corpus) {
      if (u.emotion == shared.extractor.neutral()) continue;
      const auto text = TargetText::from_utterance(u);
      syl += mcd_dtw(synth_transfer(*shared.model, shared.extractor, text, u).mel, u.mel);
      const auto s = shared.extractor.extract(u).per_syllable;
      double mean = 0;
      for (double v : s) mean += v;
      mean /= static_cast<double>(s.size());
      ControlRequest req{u.emotion, StrengthSpec::constant(mean), {}, shared.model->um_encode(u.mel)};
      sen += mcd_dtw(synth_control(*shared.model, text, req).mel, u.mel);
      ++n;
    }
    syl /= n;
    sen /= n;
    return Verdict{syl < sen, std::to_string(n) + " utts, syllable " + num(syl, 3) + " dB < sentence " +
                                  num(sen, 3) + " dB"};
  });

  criterion(11, "strength-control-monotone", [&] {
    // pitch-raising categories in the synthetic generator
    const std::vector<std::string> raising{"happiness", "anger", "surprise", "fear"};
    const auto& names = GeneratorConfig{}.categories;
    int violations = 0, checked = 0;
    std::string detail;
    for (const auto& name : raising) {
      const int e = static_cast<int>(std::find(names.begin(), names.end(), name) - names.begin());
      double mean_by_strength[3] = {0, 0, 0};
      int texts = 0;
      for (const auto& u : shared.corpus) {
        if (u.emotion != e || texts == 5) continue;
        const auto text = TargetText::from_utterance(u);
        double prev = -1e300;
        for (int k = 0; k < 3; ++k) {
          const double f = mean_f0_proxy(
              synth_control(*shared.model, text, {e, StrengthSpec::constant(0.5 * k), {}, {}}).mel);
          mean_by_strength[k] += f;
          violations += f <= prev;
          prev = f;
        }
        ++texts;
      }
      checked += texts;
      detail += " " + name + "=" + num(mean_by_strength[0] / texts, 3) + "<" + num(mean_by_strength[1] / texts, 3) +
                "<" + num(mean_by_strength[2] / texts, 3);
    }
    bool ramps = true;
    for (int k = 2; k <= 9; ++k) {
      const auto up = materialize(StrengthSpec::ramp_up(), k), down = materialize(StrengthSpec::ramp_down(), k);
      for (int i = 0; i < k; ++i) {
        ramps = ramps && up[static_cast<std::size_t>(i)] == static_cast<double>(i) / (k - 1) &&
                down[static_cast<std::size_t>(i)] == static_cast<double>(k - 1 - i) / (k - 1);
      }
    }
    return Verdict{violations == 0 && ramps && checked == 20,
                   std::to_string(violations) + " violations over " + std::to_string(checked) + " texts," +
                       detail + (ramps ? ", ramps exact" : ", ramps WRONG")};
  });

  criterion(13, "determinism", [] {
    const std::vector<std::string> small{
        "--set", "gen.per_emotion=4",     "--set", "gen.max_syllables=6", "--set", "model.d_enc=16",
        "--set", "model.d_dec=32",        "--set", "model.d_prenet=16",   "--set", "model.d_global=4",
        "--set", "model.d_utt=4",         "--set", "model.d_local=4",     "--set", "model.conv_kernel=3",
        "--set", "model.conv_channels=8", "--set", "train.steps=20",      "--set", "model.max_decode_steps=80",
        "--set", "seed=7"};
    std::vector<std::string> blobs[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path dir = scratch("c13_" + std::to_string(run));
      auto step = [&](std::vector<std::string> cmd) {
        std::vector<std::string> args = small;
        args.insert(args.end(), cmd.begin(), cmd.end());
        cli(dir, args);
      };
      step({"gen-corpus"});
      step({"train-ranker"});
      step({"extract-strengths"});
      step({"train-tts"});
      step({"synthesize", "--mode", "transfer", "--name", "t"});
      step({"synthesize", "--mode", "control", "--emotion", "anger", "--strengths", "ramp_up", "--name", "c"});
      for (const auto& entry : fs::directory_iterator(dir / "run" / "rankers")) {
        if (entry.path().extension() == ".rnk") blobs[run].push_back(slurp(entry.path()));
      }
      blobs[run].push_back(slurp(dir / "run" / "synth" / "t.mel"));
      blobs[run].push_back(slurp(dir / "run" / "synth" / "c.mel"));
      fs::remove_all(dir);
    }
    std::sort(blobs[0].begin(), blobs[0].end());
    std::sort(blobs[1].begin(), blobs[1].end());
    const bool same = blobs[0] == blobs[1] && blobs[0].size() == 8;
    return Verdict{same, std::to_string(blobs[0].size()) + " files (6 rankers, 2 mels) " +
                             (same ? "byte-identical" : "DIFFER")};
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
