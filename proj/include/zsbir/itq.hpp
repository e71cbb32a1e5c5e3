#pragma once

// Iterative quantization: mean-center the embeddings, then alternate the
// binary assignment B = sign(VR) with the orthogonal Procrustes update of R
// until the quantization loss ||B - VR||_F^2 settles.

#include "zsbir/common.hpp"

#include <Eigen/SVD>

#include <bit>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace zsbir {

struct ItqModel {
  Vec mean;      // M
  Mat rotation;  // M x M, orthogonal
  int bits = 0;
  int iters_used = 0;
};

struct ItqFitInfo {
  std::vector<double> loss_per_iter;  // quantization loss after each update
  bool rank_deficient = false;
};

namespace detail {
// sign with the tie rule sign(0) = +1
inline double sign_pos(double v) { return v < 0.0 ? -1.0 : 1.0; }

inline Mat sign_rows(const Mat& m) {
  return m.unaryExpr([](double v) { return sign_pos(v); });
}
}  // namespace detail

inline ItqModel fit_itq(const Mat& embeddings, int iters = 50,
                        std::uint64_t seed = 1, ItqFitInfo* info = nullptr,
                        std::ostream* warn = nullptr,
                        const Mat* init_rotation = nullptr) {
  const Eigen::Index n = embeddings.rows();
  const Eigen::Index m = embeddings.cols();
  if (n < m)
    throw DataError("fit_itq: need at least " + std::to_string(m) +
                    " rows, got " + std::to_string(n));
  if (iters < 1) throw ConfigError("fit_itq: iters must be >= 1");

  ItqModel model;
  model.bits = static_cast<int>(m);
  model.mean = embeddings.colwise().mean().transpose();
  Mat v = embeddings.rowwise() - model.mean.transpose();

  if (Eigen::FullPivLU<Mat>(v.transpose() * v).rank() < m) {
    if (info) info->rank_deficient = true;
    if (warn)
      *warn << "fit_itq: rank-deficient embeddings; rotation is still "
               "well-defined via the SVD\n";
  }

  // random orthogonal start (QR of a gaussian matrix) unless warm-started
  Mat r;
  if (init_rotation) {
    if (init_rotation->rows() != m || init_rotation->cols() != m)
      throw DataError("fit_itq: init rotation has the wrong shape");
    r = *init_rotation;
  } else {
    Rng rng(seed);
    Mat g(m, m);
    rng.fill_normal(g, 0.0, 1.0);
    Eigen::HouseholderQR<Mat> qr(g);
    r = qr.householderQ() * Mat::Identity(m, m);
  }

  for (int it = 0; it < iters; ++it) {
    Mat b = detail::sign_rows(v * r);
    Eigen::JacobiSVD<Mat> svd(v.transpose() * b,
                              Eigen::ComputeFullU | Eigen::ComputeFullV);
    r = svd.matrixU() * svd.matrixV().transpose();
    if (info) info->loss_per_iter.push_back((b - v * r).squaredNorm());
  }
  model.rotation = r;
  model.iters_used = iters;
  return model;
}

// codes packed MSB-first into 64-bit words: bit j lives in word j/64 at
// position 63 - j%64, so hex dumps read left to right
struct BitCode {
  int bits = 0;
  std::vector<std::uint64_t> words;

  bool bit(int j) const {
    return (words[j / 64] >> (63 - (j % 64))) & 1ULL;
  }
};

inline int hamming_distance(const BitCode& a, const BitCode& b) {
  int d = 0;
  for (std::size_t w = 0; w < a.words.size(); ++w)
    d += std::popcount(a.words[w] ^ b.words[w]);
  return d;
}

inline BitCode binarize(const ItqModel& model, const Vec& v) {
  if (v.size() != model.mean.size())
    throw DataError("binarize: embedding dim " + std::to_string(v.size()) +
                    ", expected " + std::to_string(model.mean.size()));
  Vec rotated = model.rotation.transpose() * (v - model.mean);
  BitCode code;
  code.bits = model.bits;
  code.words.assign((model.bits + 63) / 64, 0);
  for (int j = 0; j < model.bits; ++j)
    if (detail::sign_pos(rotated(j)) > 0.0)
      code.words[j / 64] |= 1ULL << (63 - (j % 64));
  return code;
}

inline std::vector<BitCode> binarize_rows(const ItqModel& model,
                                          const Mat& embeddings) {
  std::vector<BitCode> codes;
  codes.reserve(embeddings.rows());
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i)
    codes.push_back(binarize(model, embeddings.row(i).transpose()));
  return codes;
}

inline std::string code_hex(const BitCode& code) {
  static const char* digits = "0123456789abcdef";
  const int n_nibbles = (code.bits + 3) / 4;
  std::string out;
  out.reserve(n_nibbles);
  for (int i = 0; i < n_nibbles; ++i) {
    int v = 0;
    for (int b = 0; b < 4; ++b) {
      int j = 4 * i + b;
      v = (v << 1) | ((j < code.bits && code.bit(j)) ? 1 : 0);
    }
    out.push_back(digits[v]);
  }
  return out;
}

// ---- text model file + code export ----

inline void save_itq(const ItqModel& model, const std::string& path,
                     const std::string& config_hash = "") {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "itq " << model.bits << ' ' << model.iters_used << '\n';
  for (Eigen::Index i = 0; i < model.mean.size(); ++i)
    out << (i ? " " : "") << fmt_double(model.mean(i));
  out << '\n';
  for (Eigen::Index i = 0; i < model.rotation.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.rotation.cols(); ++j)
      out << (j ? " " : "") << fmt_double(model.rotation(i, j));
    out << '\n';
  }
  if (!config_hash.empty()) out << "# config " << config_hash << '\n';
}

inline ItqModel load_itq(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty itq file: " + path);
  auto head = split_ws(line);
  if (head.size() != 3 || head[0] != "itq")
    throw DataError(path + ": expected header 'itq <bits> <iters>'");
  ItqModel model;
  model.bits = static_cast<int>(std::strtol(head[1].c_str(), nullptr, 10));
  model.iters_used =
      static_cast<int>(std::strtol(head[2].c_str(), nullptr, 10));
  if (model.bits <= 0) throw DataError(path + ": bad bit count");
  auto read_row = [&](Eigen::Index want) {
    if (!std::getline(in, line)) throw DataError(path + ": truncated");
    auto toks = split_ws(line);
    if (static_cast<Eigen::Index>(toks.size()) != want)
      throw DataError(path + ": row has " + std::to_string(toks.size()) +
                      " values, expected " + std::to_string(want));
    Vec v(want);
    for (Eigen::Index i = 0; i < want; ++i) {
      double x;
      if (!parse_double(toks[i], x))
        throw DataError(path + ": non-numeric entry '" + toks[i] + "'");
      v(i) = x;
    }
    return v;
  };
  model.mean = read_row(model.bits);
  model.rotation.resize(model.bits, model.bits);
  for (int i = 0; i < model.bits; ++i)
    model.rotation.row(i) = read_row(model.bits).transpose();
  return model;
}

inline void save_codes(const std::string& path,
                       const std::vector<std::string>& ids,
                       const std::vector<BitCode>& codes,
                       const std::string& config_hash = "") {
  if (ids.size() != codes.size())
    throw DataError("save_codes: id/code count mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < ids.size(); ++i)
    out << ids[i] << ' ' << code_hex(codes[i]) << '\n';
  if (!config_hash.empty()) out << "# config " << config_hash << '\n';
}

}  // namespace zsbir
