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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emotts/acoustic.hpp"
#include "emotts/classifier.hpp"
#include "emotts/ranker.hpp"

namespace emotts {

// Piecewise-linear resampling; source samples sit at equally spaced points
// on [0, 1]. A single sample extends as a constant.
std::vector<double> interpolate_strengths(std::span<const double> source, int target_len);

struct StrengthSpec {
  enum class Kind { kConstant, kRampUp, kRampDown, kExplicit, kFromReference };
  Kind kind = Kind::kConstant;
  double value = 0.0;           // constant
  std::vector<double> values;   // explicit

  static StrengthSpec constant(double v);
  static StrengthSpec ramp_up();
  static StrengthSpec ramp_down();
  static StrengthSpec explicit_values(std::vector<double> v);
  static StrengthSpec from_reference();
};

// "constant:v", "ramp_up", "ramp_down", "explicit:a,b,c" or "from_reference".
StrengthSpec parse_strength_spec(const std::string& text);
std::string to_string(const StrengthSpec& spec);

// Per-syllable strengths for K syllables. Ramps run linearly between 0 and 1
// across the K syllables; K = 1 gives 0.5. from_reference needs the
// reference's per-syllable strengths, which are interpolated to K.
std::vector<double> materialize(const StrengthSpec& spec, int syllable_count,
                                std::span<const double> reference = {});

// Text side of a synthesis request.
struct TargetText {
  std::string text;
  PhonemeSequence phonemes;
  std::vector<SyllableSpan> syllables;  // phoneme ranges used, frames ignored

  static TargetText from_utterance(const Utterance& u);
};

ConditioningBundle transfer_bundle(const AcousticModel& model, const StrengthExtractor& extractor,
                                   const TargetText& target, const Utterance& reference);
SynthesisResult synth_transfer(const AcousticModel& model, const StrengthExtractor& extractor,
                               const TargetText& target, const Utterance& reference);

ConditioningBundle predict_bundle(const AcousticModel& model, const PosteriorSource& classifier,
                                  const TargetText& target);
SynthesisResult synth_predict(const AcousticModel& model, const PosteriorSource& classifier,
                              const TargetText& target);

struct ControlRequest {
  int category = 0;
  StrengthSpec spec;
  std::vector<double> reference_strengths;  // for from_reference only
  std::optional<Vector> h_utt_override;     // default: prior mean of category
};

ConditioningBundle control_bundle(const AcousticModel& model, const TargetText& target,
                                  const ControlRequest& request);
SynthesisResult synth_control(const AcousticModel& model, const TargetText& target,
                              const ControlRequest& request);

}  // namespace emotts
