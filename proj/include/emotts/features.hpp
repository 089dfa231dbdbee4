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

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "emotts/corpus.hpp"

namespace emotts {

// Pitch and energy proxies read off a log-mel matrix.
//   f0     = channel 0
//   energy = log(mean_c exp(mel[t][c]))
struct FeatureTracks {
  std::vector<double> f0;
  std::vector<double> energy;
};

FeatureTracks frame_feature_tracks(const Matrix& mel);

// Per track (f0 then energy): mean, std, min, max, range, slope.
inline constexpr int kFeatureDim = 12;

struct FeatureVector {
  Vector values;
  std::optional<SyllableSpan> source_span;
};

// Statistics over frames [span.frame_start, span.frame_end]. Standard
// deviation is the population form; slope is ordinary least squares
// against frame index (0 for a single frame).
FeatureVector aggregate_segment_features(const Matrix& mel, const SyllableSpan& span);

// Same statistics over every frame.
FeatureVector utterance_features(const Matrix& mel);

// Statistics of one sequence, in the order listed above.
std::array<double, 6> track_statistics(std::span<const double> values);

}  // namespace emotts
