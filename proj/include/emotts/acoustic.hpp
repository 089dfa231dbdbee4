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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "emotts/classifier.hpp"
#include "emotts/conditioning.hpp"
#include "emotts/corpus.hpp"
#include "emotts/nn.hpp"

namespace emotts {

struct ModelConfig {
  int vocabulary_size = 40;
  int categories = 7;
  int mel_bins = 20;
  int d_enc = 128;
  int d_dec = 256;
  int d_prenet = 128;
  int mixtures = 3;
  int d_global = 64;
  int d_utt = 64;
  int d_local = 64;
  int conv_kernel = 5;
  int conv_channels = 64;
  double lambda_local = 1.0;
  double lambda_utt = 1.0;
  double prenet_dropout = 0.5;
  double encoder_dropout = 0.1;
  double conditioning_dropout = 0.1;
  int max_decode_steps = 500;
  // softplus(bias) of the mean-advance unit at initialization, in phonemes
  // per decoder step.
  double attention_init_step = 0.3;
  double sigma_floor = 0.1;
  std::uint64_t seed = 0;

  // Throws Error naming the first bad field.
  void validate() const;
  int d_cond() const { return d_enc + d_local + d_global + d_utt; }

  // One "key=value" line per field, fixed order.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
  // Applies one key=value pair; returns false for unknown keys.
  bool set(const std::string& key, const std::string& value);

  bool operator==(const ModelConfig&) const = default;
};

// Small sizes for unit tests and the acceptance run.
ModelConfig small_model_config();

struct SynthesisResult {
  Matrix mel;               // frames x mel_bins
  int stop_step = -1;       // index of the frame that fired the stop unit, -1 if none
  bool overran = false;     // hit max_decode_steps without stopping
  Matrix attention_means;   // frames x G, mixture means after each step
};

// Teacher-forced decoder outputs kept on the graph.
struct DecoderOutputs {
  Var frames;       // N x mel_bins
  Var stop_logits;  // N x 1
  Matrix attention_means;
};

class AcousticModel {
 public:
  explicit AcousticModel(const ModelConfig& config);

  // Copies share nothing; parameters are deep-copied.
  AcousticModel(const AcousticModel& other);
  AcousticModel& operator=(const AcousticModel& other);
  AcousticModel(AcousticModel&&) = default;
  AcousticModel& operator=(AcousticModel&&) = default;

  const ModelConfig& config() const { return config_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }

  // --- graph-level pieces (training) ---
  Var encode(const PhonemeSequence& phonemes, bool training, std::mt19937_64& rng) const;
  Var condition(const Var& encodings, const Var& h_global, const Var& h_utt,
                const Var& h_local) const;
  DecoderOutputs decode_teacher_forced(const Var& memory, const Matrix& target_mel, bool training,
                                       std::mt19937_64& rng) const;

  const GlobalEmbedding& global_embedding() const { return gm_; }
  const UtteranceEncoder& utterance_encoder() const { return um_encoder_; }
  const UtterancePredictor& utterance_predictor() const { return um_predictor_; }
  const LocalProjection& local_projection() const { return lm_projection_; }
  const LocalPredictor& local_predictor() const { return lm_predictor_; }

  // --- evaluation-mode helpers ---
  Matrix gm_table() const { return gm_.table().value(); }
  Vector gm_embed(const EmotionPosterior& posterior) const;
  Vector um_encode(const Matrix& mel) const;
  Vector um_predict(const PhonemeSequence& phonemes) const;
  std::vector<double> lm_predict(const PhonemeSequence& phonemes) const;
  Matrix lm_project(std::span<const double> per_phoneme_strengths) const;
  Matrix encoder_output(const PhonemeSequence& phonemes) const;

  // T x d_cond, [encoder | h_local | h_global | h_utt] per row.
  Matrix encode_and_condition(const PhonemeSequence& phonemes,
                              const ConditioningBundle& bundle) const;
  SynthesisResult synthesize(const PhonemeSequence& phonemes,
                             const ConditioningBundle& bundle) const;

  // Prior utterance variation, keyed by category; key -1 is the global mean.
  void set_prior_mean(int category, Vector mean);
  const std::map<int, Vector>& prior_means() const { return prior_means_; }
  // Falls back to the global mean when the category has none.
  Vector prior_mean(int category) const;

 private:
  void build();
  void check_bundle(const ConditioningBundle& bundle, Eigen::Index phoneme_count) const;

  struct StepState {
    Var h_att, h_dec, context, mu;
  };
  // One decoder step from a prenet row; returns {h_dec, context} in state.
  void decoder_step(const Var& prenet_row, const Var& memory, StepState& state) const;
  Var prenet(const Var& frames, bool training, std::mt19937_64& rng) const;

  ModelConfig config_;
  nn::ParameterStore store_;

  Var embedding_;
  nn::Conv1d enc_conv_;
  nn::GRUCell enc_fwd_, enc_bwd_;
  GlobalEmbedding gm_;
  UtteranceEncoder um_encoder_;
  UtterancePredictor um_predictor_;
  LocalProjection lm_projection_;
  LocalPredictor lm_predictor_;
  nn::Linear prenet1_, prenet2_;
  nn::GRUCell att_rnn_, dec_rnn_;
  nn::Linear att_params_;
  nn::Linear frame_out_, stop_out_;

  std::map<int, Vector> prior_means_;
};

// Mean of um_encode over the selected utterances: one category, or all
// when category is empty.
Vector um_prior_mean(const AcousticModel& model, std::span<const Utterance> corpus,
                     std::optional<int> category = std::nullopt);

// Stores the global mean and one mean per category present in the corpus.
void fit_prior_means(AcousticModel& model, std::span<const Utterance> corpus);

struct TrainingExample {
  const Utterance* utterance = nullptr;
  std::vector<double> phoneme_strengths;  // extractor output, expanded to phonemes
};

struct LossBreakdown {
  double acoustic = 0;  // mel + stop
  double mel = 0;
  double stop = 0;
  double local = 0;
  double utt = 0;
  double total = 0;
};

struct TrainerOptions {
  double learning_rate = 1e-3;
  double grad_clip = 1.0;  // global norm, per parameter group; <= 0 disables
  std::uint64_t seed = 0;
};

class Trainer {
 public:
  Trainer(AcousticModel& model, TrainerOptions options);

  // Forward and backward over the batch; gradients are left on the
  // parameters. Throws Error on a non-finite loss.
  LossBreakdown compute_gradients(std::span<const TrainingExample> batch);
  // compute_gradients followed by one optimizer update.
  LossBreakdown step(std::span<const TrainingExample> batch);

  long steps() const { return steps_; }
  void set_lambdas(double lambda_local, double lambda_utt);

 private:
  AcousticModel& model_;
  TrainerOptions options_;
  nn::Adam adam_;
  std::mt19937_64 rng_;
  long steps_ = 0;
  double lambda_local_, lambda_utt_;
};

bool is_predictor_parameter(const std::string& name);

// Binary layout, little-endian:
//   char[4] "ECKP" | u32 version | u32 n + config text | u64 step | u64 seed |
//   u32 blocks | per block: u32 n + name, u32 rows, u32 cols, f64 data (column-major)
// Prior means are stored as blocks named "prior/<category>" and "prior/global".
void save_checkpoint(const std::filesystem::path& path, const AcousticModel& model,
                     std::uint64_t step);

struct LoadedCheckpoint {
  AcousticModel model;
  std::uint64_t step = 0;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);
// Refuses files whose stored config differs from expected.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace emotts
