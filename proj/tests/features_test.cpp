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

#include <random>

#include <gtest/gtest.h>

#include "emotts/features.hpp"

namespace emotts {
namespace {

TEST(FrameTracks, SingleFrameShape) {
  Matrix mel = Matrix::Constant(1, 4, 0.3);
  const auto t = frame_feature_tracks(mel);
  EXPECT_EQ(t.f0.size(), 1u);
  EXPECT_EQ(t.energy.size(), 1u);
}

TEST(FrameTracks, EqualFramesGiveConstantTracks) {
  Matrix mel(5, 3);
  for (int r = 0; r < 5; ++r) mel.row(r) << 0.2, -0.4, 1.1;
  const auto t = frame_feature_tracks(mel);
  for (int r = 1; r < 5; ++r) {
    EXPECT_EQ(t.f0[r], t.f0[0]);
    EXPECT_EQ(t.energy[r], t.energy[0]);
  }
  EXPECT_NEAR(t.energy[0], std::log((std::exp(0.2) + std::exp(-0.4) + std::exp(1.1)) / 3), 1e-12);
}

TEST(FrameTracks, EnergyMonotoneInFrameMagnitude) {
  Matrix mel(2, 3);
  mel.row(0) << 0.1, 0.2, 0.3;
  mel.row(1) = mel.row(0).array() + 0.5;
  const auto t = frame_feature_tracks(mel);
  EXPECT_NEAR(t.energy[1] - t.energy[0], 0.5, 1e-12);
}

TEST(FrameTracks, HigherStrengthRaisesPitchProxy) {
  GeneratorConfig cfg;
  const std::vector<std::vector<int>> syl{{1, 2}, {3}};
  const auto lo = render_synthetic_utterance(cfg, "a", "", 1, syl, {0.0, 0.4}, 0.0, 0.0, 5);
  const auto hi = render_synthetic_utterance(cfg, "b", "", 1, syl, {1.0, 0.4}, 0.0, 0.0, 5);
  const auto mean_f0 = [](const Utterance& u) {
    const auto t = frame_feature_tracks(u.mel);
    const auto& s = u.syllables[0];
    double acc = 0;
    for (int f = s.frame_start; f <= s.frame_end; ++f) acc += t.f0[static_cast<std::size_t>(f)];
    return acc / s.frame_count();
  };
  EXPECT_GT(mean_f0(hi), mean_f0(lo));
}

TEST(FrameTracks, RejectsEmptyAndNarrowMel) {
  EXPECT_THROW(frame_feature_tracks(Matrix(0, 4)), Error);
  EXPECT_THROW(frame_feature_tracks(Matrix::Zero(3, 1)), Error);
}

TEST(SegmentFeatures, ConstantTrackStatistics) {
  Matrix mel = Matrix::Constant(6, 3, 0.7);
  const auto f = aggregate_segment_features(mel, {0, 0, 1, 4});
  ASSERT_EQ(f.values.size(), kFeatureDim);
  for (int base : {0, 6}) {
    EXPECT_NEAR(f.values(base + 1), 0.0, 1e-12);  // std
    EXPECT_NEAR(f.values(base + 4), 0.0, 1e-12);  // range
    EXPECT_NEAR(f.values(base + 5), 0.0, 1e-12);  // slope
  }
}

TEST(SegmentFeatures, LinearRampClosedForm) {
  Matrix mel = Matrix::Zero(3, 2);
  mel.col(0) << 0, 1, 2;
  const auto f = aggregate_segment_features(mel, {0, 0, 0, 2});
  EXPECT_NEAR(f.values(0), 1.0, 1e-12);
  EXPECT_NEAR(f.values(1), std::sqrt(2.0 / 3.0), 1e-12);
  EXPECT_NEAR(f.values(2), 0.0, 1e-12);
  EXPECT_NEAR(f.values(3), 2.0, 1e-12);
  EXPECT_NEAR(f.values(4), 2.0, 1e-12);
  EXPECT_NEAR(f.values(5), 1.0, 1e-12);
}

TEST(SegmentFeatures, SingleFrameSlopeIsZero) {
  Matrix mel = Matrix::Random(4, 3);
  const auto f = aggregate_segment_features(mel, {0, 0, 2, 2});
  EXPECT_EQ(f.values(5), 0.0);
  EXPECT_EQ(f.values(11), 0.0);
}

TEST(SegmentFeatures, UtteranceMeanIsDurationWeightedSyllableMean) {
  GeneratorConfig cfg;
  const auto corpus = generate_synthetic_corpus(2, 2, cfg);
  for (const auto& u : corpus) {
    const auto whole = utterance_features(u.mel);
    double f0 = 0, energy = 0;
    for (const auto& s : u.syllables) {
      const auto f = aggregate_segment_features(u.mel, s);
      f0 += f.values(0) * s.frame_count();
      energy += f.values(6) * s.frame_count();
    }
    EXPECT_NEAR(whole.values(0), f0 / u.frame_count(), 1e-9);
    EXPECT_NEAR(whole.values(6), energy / u.frame_count(), 1e-9);
    EXPECT_EQ(whole.values.size(), aggregate_segment_features(u.mel, u.syllables[0]).values.size());
  }
}

TEST(SegmentFeatures, ChannelZeroShiftMovesOnlyLocationStatistics) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix mel(8, 5);
    for (Eigen::Index i = 0; i < mel.size(); ++i) mel.data()[i] = u(rng);
    const double c = 3.0 * u(rng);
    Matrix shifted = mel;
    shifted.col(0).array() += c;
    const SyllableSpan span{0, 0, 1, 6};
    const auto a = aggregate_segment_features(mel, span);
    const auto b = aggregate_segment_features(shifted, span);
    EXPECT_NEAR(b.values(0) - a.values(0), c, 1e-9);
    EXPECT_NEAR(b.values(2) - a.values(2), c, 1e-9);
    EXPECT_NEAR(b.values(3) - a.values(3), c, 1e-9);
    EXPECT_NEAR(b.values(1), a.values(1), 1e-9);
    EXPECT_NEAR(b.values(4), a.values(4), 1e-9);
    EXPECT_NEAR(b.values(5), a.values(5), 1e-9);
  }
}

TEST(SegmentFeatures, RejectsBadSpans) {
  Matrix mel = Matrix::Zero(4, 2);
  EXPECT_THROW(aggregate_segment_features(mel, {0, 0, 3, 2}), Error);
  EXPECT_THROW(aggregate_segment_features(mel, {0, 0, 2, 4}), Error);
  EXPECT_THROW(aggregate_segment_features(mel, {0, 0, -1, 1}), Error);
}

}  // namespace
}  // namespace emotts
