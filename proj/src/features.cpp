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

#include "emotts/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace emotts {

FeatureTracks frame_feature_tracks(const Matrix& mel) {
  if (mel.rows() < 1) throw Error("feature tracks: empty mel");
  if (mel.cols() < 2) throw Error("feature tracks: mel needs at least two channels");
  FeatureTracks tracks;
  tracks.f0.resize(static_cast<std::size_t>(mel.rows()));
  tracks.energy.resize(static_cast<std::size_t>(mel.rows()));
  const double log_bins = std::log(static_cast<double>(mel.cols()));
  for (Eigen::Index t = 0; t < mel.rows(); ++t) {
    const double peak = mel.row(t).maxCoeff();
    const double lse = peak + std::log((mel.row(t).array() - peak).exp().sum());
    tracks.f0[static_cast<std::size_t>(t)] = mel(t, 0);
    tracks.energy[static_cast<std::size_t>(t)] = lse - log_bins;
  }
  return tracks;
}

std::array<double, 6> track_statistics(std::span<const double> values) {
  const auto n = values.size();
  if (n == 0) throw Error("track statistics: empty segment");
  double sum = 0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(n);
  double var = 0, lo = values[0], hi = values[0];
  for (double v : values) {
    var += (v - mean) * (v - mean);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  var /= static_cast<double>(n);
  double slope = 0;
  if (n > 1) {
    const double x_mean = static_cast<double>(n - 1) / 2.0;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = static_cast<double>(i) - x_mean;
      sxy += dx * (values[i] - mean);
      sxx += dx * dx;
    }
    slope = sxy / sxx;
  }
  return {mean, std::sqrt(var), lo, hi, hi - lo, slope};
}

FeatureVector aggregate_segment_features(const Matrix& mel, const SyllableSpan& span) {
  if (span.frame_start > span.frame_end) throw Error("segment features: empty span");
  if (span.frame_start < 0 || span.frame_end >= mel.rows()) {
    throw Error("segment features: span [" + std::to_string(span.frame_start) + ", " +
                std::to_string(span.frame_end) + "] outside " + std::to_string(mel.rows()) +
                " frames");
  }
  const Matrix segment = mel.middleRows(span.frame_start, span.frame_count());
  const FeatureTracks tracks = frame_feature_tracks(segment);
  const auto f0 = track_statistics(tracks.f0);
  const auto energy = track_statistics(tracks.energy);
  FeatureVector fv;
  fv.values.resize(kFeatureDim);
  for (int i = 0; i < 6; ++i) {
    fv.values(i) = f0[static_cast<std::size_t>(i)];
    fv.values(6 + i) = energy[static_cast<std::size_t>(i)];
  }
  fv.source_span = span;
  return fv;
}

FeatureVector utterance_features(const Matrix& mel) {
  if (mel.rows() < 1) throw Error("utterance features: empty mel");
  SyllableSpan whole{0, 0, 0, static_cast<int>(mel.rows()) - 1};
  FeatureVector fv = aggregate_segment_features(mel, whole);
  fv.source_span.reset();
  return fv;
}

}  // namespace emotts
