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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "emotts/corpus.hpp"

namespace emotts {

inline constexpr int kCepstralOrder = 12;

// Orthonormal DCT-II of each frame (mel values are log-mel already),
// keeping c_1..c_12. Needs at least 13 bins.
Matrix mel_cepstra(const Matrix& mel);

struct MCDResult {
  double mcd_db = 0;
  int path_length = 0;
};

// Mel-cepstral distortion in dB over a DTW alignment with steps
// (1,0), (0,1), (1,1). Ties between equal-cost paths go to the shorter one,
// which keeps the result symmetric in its arguments.
MCDResult mcd_dtw_detail(const Matrix& mel_a, const Matrix& mel_b);
double mcd_dtw(const Matrix& mel_a, const Matrix& mel_b);

struct MCDEntry {
  std::string id;
  std::string emotion;
  double mcd_db = 0;
  int path_length = 0;
};

struct MCDReport {
  std::vector<MCDEntry> entries;

  void add(std::string id, std::string emotion, const MCDResult& r);
  double overall_mean() const;
  std::map<std::string, double> per_emotion_mean() const;

  // id, emotion, mcd_db, path_length per row; header first.
  void write_tsv(const std::filesystem::path& path) const;
  void write_json(const std::filesystem::path& path) const;
};

std::vector<double> f0_proxy_curve(const Matrix& mel);
double mean_f0_proxy(const Matrix& mel);

struct LabeledCurve {
  std::string label;
  std::vector<double> values;
};

// Line chart PNG with a legend. Throws Error on empty input or I/O failure.
void emit_curve_plot(const std::vector<LabeledCurve>& curves, const std::filesystem::path& path,
                     const std::string& title = "");

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace emotts
