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

#include "emotts/eval.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <png.h>

#include "json.hpp"

#include "emotts/features.hpp"

namespace emotts {

namespace {

Matrix dct_basis(int bins, int coeffs) {
  // Row k: orthonormal DCT-II basis vector k.
  Matrix basis(coeffs, bins);
  const double pi = std::acos(-1.0);
  for (int k = 0; k < coeffs; ++k) {
    const double norm = std::sqrt((k == 0 ? 1.0 : 2.0) / bins);
    for (int n = 0; n < bins; ++n) basis(k, n) = norm * std::cos(pi * k * (2 * n + 1) / (2.0 * bins));
  }
  return basis;
}

}  // namespace

Matrix mel_cepstra(const Matrix& mel) {
  if (mel.rows() < 1) throw Error("mel_cepstra: empty input");
  if (mel.cols() < kCepstralOrder + 1) {
    throw Error("mel_cepstra: need at least " + std::to_string(kCepstralOrder + 1) + " mel bins");
  }
  const Matrix basis = dct_basis(static_cast<int>(mel.cols()), kCepstralOrder + 1);
  // Plain per-frame dot products: equal frames give bit-equal cepstra no
  // matter where they sit in the matrix.
  Matrix out(mel.rows(), kCepstralOrder);
  for (Eigen::Index t = 0; t < mel.rows(); ++t) {
    for (int k = 1; k <= kCepstralOrder; ++k) {
      double acc = 0;
      for (Eigen::Index n = 0; n < mel.cols(); ++n) acc += basis(k, n) * mel(t, n);
      out(t, k - 1) = acc;
    }
  }
  return out;
}

MCDResult mcd_dtw_detail(const Matrix& mel_a, const Matrix& mel_b) {
  if (mel_a.rows() < 1 || mel_b.rows() < 1) throw Error("mcd_dtw: empty input");
  if (mel_a.cols() != mel_b.cols()) {
    throw Error("mcd_dtw: mel bin mismatch (" + std::to_string(mel_a.cols()) + " vs " +
                std::to_string(mel_b.cols()) + ")");
  }
  const Matrix ca = mel_cepstra(mel_a), cb = mel_cepstra(mel_b);
  const Eigen::Index n = ca.rows(), m = cb.rows();
  constexpr double inf = std::numeric_limits<double>::infinity();
  Matrix cost = Matrix::Constant(n + 1, m + 1, inf);
  Eigen::MatrixXi len = Eigen::MatrixXi::Zero(n + 1, m + 1);
  cost(0, 0) = 0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    for (Eigen::Index j = 1; j <= m; ++j) {
      double sq = 0;
      for (Eigen::Index d = 0; d < kCepstralOrder; ++d) {
        const double diff = ca(i - 1, d) - cb(j - 1, d);
        sq += diff * diff;
      }
      const double dist = std::sqrt(2.0 * sq);
      const std::array<std::pair<Eigen::Index, Eigen::Index>, 3> preds{
          {{i - 1, j - 1}, {i - 1, j}, {i, j - 1}}};
      double best = inf;
      int best_len = 0;
      for (auto [pi, pj] : preds) {
        const double c = cost(pi, pj);
        const int l = len(pi, pj);
        if (c < best || (c == best && l < best_len)) {
          best = c;
          best_len = l;
        }
      }
      cost(i, j) = best + dist;
      len(i, j) = best_len + 1;
    }
  }
  MCDResult r;
  r.path_length = len(n, m);
  r.mcd_db = 10.0 / std::log(10.0) * cost(n, m) / r.path_length;
  return r;
}

double mcd_dtw(const Matrix& mel_a, const Matrix& mel_b) { return mcd_dtw_detail(mel_a, mel_b).mcd_db; }

void MCDReport::add(std::string id, std::string emotion, const MCDResult& r) {
  entries.push_back({std::move(id), std::move(emotion), r.mcd_db, r.path_length});
}

double MCDReport::overall_mean() const {
  if (entries.empty()) throw Error("MCD report is empty");
  double acc = 0;
  for (const auto& e : entries) acc += e.mcd_db;
  return acc / static_cast<double>(entries.size());
}

std::map<std::string, double> MCDReport::per_emotion_mean() const {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& e : entries) {
    acc[e.emotion].first += e.mcd_db;
    acc[e.emotion].second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

void MCDReport::write_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "id\temotion\tmcd_db\tpath_length\n";
  char buf[64];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%.6f", e.mcd_db);
    out << e.id << '\t' << e.emotion << '\t' << buf << '\t' << e.path_length << '\n';
  }
  for (const auto& [emotion, mean] : per_emotion_mean()) {
    std::snprintf(buf, sizeof buf, "%.6f", mean);
    out << "mean\t" << emotion << '\t' << buf << "\t-\n";
  }
  std::snprintf(buf, sizeof buf, "%.6f", overall_mean());
  out << "mean\tall\t" << buf << "\t-\n";
}

void MCDReport::write_json(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["utterances"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    j["utterances"].push_back(
        {{"id", e.id}, {"emotion", e.emotion}, {"mcd_db", e.mcd_db}, {"path_length", e.path_length}});
  }
  j["per_emotion_mean"] = per_emotion_mean();
  j["overall_mean"] = overall_mean();
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<double> f0_proxy_curve(const Matrix& mel) {
  if (mel.rows() < 1) throw Error("f0_proxy_curve: empty mel");
  return frame_feature_tracks(mel).f0;
}

double mean_f0_proxy(const Matrix& mel) {
  const auto curve = f0_proxy_curve(mel);
  return std::accumulate(curve.begin(), curve.end(), 0.0) / static_cast<double>(curve.size());
}

// --- plotting ------------------------------------------------------------------

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w * h), Rgb{255, 255, 255}) {}
  void set(int x, int y, Rgb c) {
    if (x >= 0 && y >= 0 && x < w_ && y < h_) px_[static_cast<std::size_t>(y * w_ + x)] = c;
  }
  void line(double x0, double y0, double x1, double y1, Rgb c) {
    const int steps = static_cast<int>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
      const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
      set(x, y, c);
      set(x, y + 1, c);
    }
  }
  void rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) set(x, y, c);
  }
  void text(int x, int y, const std::string& s, Rgb c);
  int width() const { return w_; }
  int height() const { return h_; }
  const std::vector<Rgb>& pixels() const { return px_; }

 private:
  int w_, h_;
  std::vector<Rgb> px_;
};

// 5x7 glyphs, one byte per row, low five bits used (bit 4 = leftmost).
const std::array<std::uint8_t, 7>* glyph(char ch) {
  static const std::map<char, std::array<std::uint8_t, 7>> font = {
      {'0', {14, 17, 19, 21, 25, 17, 14}}, {'1', {4, 12, 4, 4, 4, 4, 14}},
      {'2', {14, 17, 1, 2, 4, 8, 31}},     {'3', {30, 1, 1, 14, 1, 1, 30}},
      {'4', {2, 6, 10, 18, 31, 2, 2}},     {'5', {31, 16, 30, 1, 1, 17, 14}},
      {'6', {6, 8, 16, 30, 17, 17, 14}},   {'7', {31, 1, 2, 4, 8, 8, 8}},
      {'8', {14, 17, 17, 14, 17, 17, 14}}, {'9', {14, 17, 17, 15, 1, 2, 12}},
      {'A', {14, 17, 17, 31, 17, 17, 17}}, {'B', {30, 17, 17, 30, 17, 17, 30}},
      {'C', {14, 17, 16, 16, 16, 17, 14}}, {'D', {30, 17, 17, 17, 17, 17, 30}},
      {'E', {31, 16, 16, 30, 16, 16, 31}}, {'F', {31, 16, 16, 30, 16, 16, 16}},
      {'G', {14, 17, 16, 23, 17, 17, 15}}, {'H', {17, 17, 17, 31, 17, 17, 17}},
      {'I', {14, 4, 4, 4, 4, 4, 14}},      {'J', {7, 2, 2, 2, 2, 18, 12}},
      {'K', {17, 18, 20, 24, 20, 18, 17}}, {'L', {16, 16, 16, 16, 16, 16, 31}},
      {'M', {17, 27, 21, 21, 17, 17, 17}}, {'N', {17, 17, 25, 21, 19, 17, 17}},
      {'O', {14, 17, 17, 17, 17, 17, 14}}, {'P', {30, 17, 17, 30, 16, 16, 16}},
      {'Q', {14, 17, 17, 17, 21, 18, 13}}, {'R', {30, 17, 17, 30, 20, 18, 17}},
      {'S', {15, 16, 16, 14, 1, 1, 30}},   {'T', {31, 4, 4, 4, 4, 4, 4}},
      {'U', {17, 17, 17, 17, 17, 17, 14}}, {'V', {17, 17, 17, 17, 17, 10, 4}},
      {'W', {17, 17, 17, 21, 21, 21, 10}}, {'X', {17, 17, 10, 4, 10, 17, 17}},
      {'Y', {17, 17, 10, 4, 4, 4, 4}},     {'Z', {31, 1, 2, 4, 8, 16, 31}},
      {'.', {0, 0, 0, 0, 0, 12, 12}},      {'-', {0, 0, 0, 31, 0, 0, 0}},
      {':', {0, 12, 12, 0, 12, 12, 0}},    {'_', {0, 0, 0, 0, 0, 0, 31}},
      {'=', {0, 0, 31, 0, 31, 0, 0}},      {'/', {1, 1, 2, 4, 8, 16, 16}},
      {'(', {2, 4, 8, 8, 8, 4, 2}},        {')', {8, 4, 2, 2, 2, 4, 8}},
      {',', {0, 0, 0, 0, 12, 4, 8}},
  };
  auto it = font.find(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  return it == font.end() ? nullptr : &it->second;
}

void Canvas::text(int x, int y, const std::string& s, Rgb c) {
  for (char ch : s) {
    if (const auto* g = glyph(ch)) {
      for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
          if ((*g)[static_cast<std::size_t>(row)] & (1 << (4 - col))) set(x + col, y + row, c);
    }
    x += 6;
  }
}

void write_png(const std::filesystem::path& path, const Canvas& canvas) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw Error("cannot write plot " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(canvas.width()),
               static_cast<png_uint_32>(canvas.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(canvas.width() * 3));
  for (int y = 0; y < canvas.height(); ++y) {
    for (int x = 0; x < canvas.width(); ++x) {
      const Rgb& c = canvas.pixels()[static_cast<std::size_t>(y * canvas.width() + x)];
      row[static_cast<std::size_t>(3 * x)] = c.r;
      row[static_cast<std::size_t>(3 * x + 1)] = c.g;
      row[static_cast<std::size_t>(3 * x + 2)] = c.b;
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw Error("cannot close plot " + path.string());
}

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void emit_curve_plot(const std::vector<LabeledCurve>& curves, const std::filesystem::path& path,
                     const std::string& title) {
  if (curves.empty()) throw Error("emit_curve_plot: no curves");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t longest = 0;
  for (const auto& c : curves) {
    if (c.values.empty()) throw Error("emit_curve_plot: curve '" + c.label + "' is empty");
    for (double v : c.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    longest = std::max(longest, c.values.size());
  }
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  static const Rgb palette[] = {{31, 119, 180}, {214, 39, 40},  {44, 160, 44},  {148, 103, 189},
                                {255, 127, 14}, {140, 86, 75},  {227, 119, 194}, {23, 190, 207}};
  const int w = 640, h = 400, left = 60, right = 20, top = 30, bottom = 40;
  Canvas canvas(w, h + 14 * static_cast<int>(curves.size()));
  const Rgb axis{0, 0, 0}, grey{200, 200, 200};
  canvas.line(left, top, left, h - bottom, axis);
  canvas.line(left, h - bottom, w - right, h - bottom, axis);
  for (int i = 0; i <= 4; ++i) {
    const double frac = i / 4.0;
    const double y = h - bottom - frac * (h - bottom - top);
    canvas.line(left + 2, y, w - right, y, grey);
    canvas.text(4, static_cast<int>(y) - 3, short_number(lo + frac * (hi - lo)), axis);
  }
  canvas.text(left, 10, title, axis);
  canvas.text(w / 2 - 18, h - bottom + 14, "FRAME", axis);
  const double xscale = longest > 1 ? (w - left - right) / static_cast<double>(longest - 1) : 0.0;
  const double yscale = (h - bottom - top) / (hi - lo);
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const Rgb c = palette[k % std::size(palette)];
    const auto& v = curves[k].values;
    auto px = [&](std::size_t i) { return left + xscale * static_cast<double>(i); };
    auto py = [&](std::size_t i) { return h - bottom - (v[i] - lo) * yscale; };
    if (v.size() == 1) canvas.rect(left - 1, static_cast<int>(py(0)) - 1, left + 1, static_cast<int>(py(0)) + 1, c);
    for (std::size_t i = 1; i < v.size(); ++i) canvas.line(px(i - 1), py(i - 1), px(i), py(i), c);
    const int ly = h + 14 * static_cast<int>(k);
    canvas.rect(left, ly, left + 16, ly + 6, c);
    canvas.text(left + 24, ly, curves[k].label, axis);
  }
  write_png(path, canvas);
}

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw Error("spearman: need two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace emotts
