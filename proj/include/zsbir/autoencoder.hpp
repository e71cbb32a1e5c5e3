#pragma once

// Side-information autoencoder: two sigmoid fc layers with a row-sparsity
// (l2,1) penalty on the encoder weight, so rows of W1 double as a relevance
// score per side-information coordinate.

#include "zsbir/common.hpp"

#include <utility>
#include <vector>

namespace zsbir {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// W1 is k x m (row = input coordinate), W2 is m x k; the affine maps apply
// the transposes, matching the row-sparsity interpretation of W1.
struct AutoEncoderParams {
  Mat W1;  // k x m
  Vec b1;  // m
  Mat W2;  // m x k
  Vec b2;  // k
  double lambda = 0.5;

  int input_dim() const { return static_cast<int>(W1.rows()); }
  int code_dim() const { return static_cast<int>(W1.cols()); }
};

inline AutoEncoderParams init_autoencoder(int k, int m, double lambda,
                                          Rng& rng) {
  AutoEncoderParams p;
  double a1 = 1.0 / std::sqrt(static_cast<double>(k));
  double a2 = 1.0 / std::sqrt(static_cast<double>(m));
  p.W1.resize(k, m);
  rng.fill_uniform(p.W1, -a1, a1);
  p.b1 = Vec::Zero(m);
  p.W2.resize(m, k);
  rng.fill_uniform(p.W2, -a2, a2);
  p.b2 = Vec::Zero(k);
  p.lambda = lambda;
  return p;
}

inline Vec aenc_encode(const AutoEncoderParams& p, const Vec& s) {
  if (s.size() != p.W1.rows())
    throw DataError("encode: side vector has dim " + std::to_string(s.size()) +
                    ", expected " + std::to_string(p.W1.rows()));
  ensure_finite(s, "encode input");
  Vec u = p.W1.transpose() * s + p.b1;
  return (1.0 / (1.0 + (-u.array()).exp())).matrix();
}

inline Vec aenc_decode(const AutoEncoderParams& p, const Vec& z) {
  if (z.size() != p.W2.rows())
    throw DataError("decode: code has dim " + std::to_string(z.size()) +
                    ", expected " + std::to_string(p.W2.rows()));
  ensure_finite(z, "decode input");
  Vec u = p.W2.transpose() * z + p.b2;
  return (1.0 / (1.0 + (-u.array()).exp())).matrix();
}

// rows of S are samples
inline Mat aenc_encode_rows(const AutoEncoderParams& p, const Mat& S) {
  Mat U = (S * p.W1).rowwise() + p.b1.transpose();
  return (1.0 / (1.0 + (-U.array()).exp())).matrix();
}

inline Mat aenc_decode_rows(const AutoEncoderParams& p, const Mat& Z) {
  Mat U = (Z * p.W2).rowwise() + p.b2.transpose();
  return (1.0 / (1.0 + (-U.array()).exp())).matrix();
}

inline double l21_norm(const Mat& w) {
  double sum = 0.0;
  for (Eigen::Index r = 0; r < w.rows(); ++r) sum += w.row(r).norm();
  return sum;
}

// mean squared reconstruction error over the batch plus lambda * ||W1||_2,1
inline double aenc_loss(const AutoEncoderParams& p, const Mat& s_batch) {
  if (s_batch.rows() == 0) throw DataError("aenc_loss: empty batch");
  Mat recon = aenc_decode_rows(p, aenc_encode_rows(p, s_batch));
  double mse = (recon - s_batch).squaredNorm() /
               static_cast<double>(s_batch.rows());
  return mse + p.lambda * l21_norm(p.W1);
}

struct AutoEncoderGrad {
  Mat W1;
  Vec b1;
  Mat W2;
  Vec b2;

  static AutoEncoderGrad zeros_like(const AutoEncoderParams& p) {
    AutoEncoderGrad g;
    g.W1 = Mat::Zero(p.W1.rows(), p.W1.cols());
    g.b1 = Vec::Zero(p.b1.size());
    g.W2 = Mat::Zero(p.W2.rows(), p.W2.cols());
    g.b2 = Vec::Zero(p.b2.size());
    return g;
  }
};

// Subgradient convention: rows of W1 with vanishing norm contribute 0.
constexpr double kL21ZeroRow = 1e-12;

inline double aenc_loss_grad(const AutoEncoderParams& p, const Mat& s_batch,
                             AutoEncoderGrad& grad, double weight = 1.0) {
  if (s_batch.rows() == 0) throw DataError("aenc_loss: empty batch");
  const double n = static_cast<double>(s_batch.rows());
  Mat z = aenc_encode_rows(p, s_batch);           // n x m
  Mat recon = aenc_decode_rows(p, z);             // n x k
  Mat err = recon - s_batch;                      // n x k
  double value = err.squaredNorm() / n + p.lambda * l21_norm(p.W1);

  // d mse / d recon = 2 err / n, then back through the two sigmoid layers
  Mat d_v = ((2.0 / n) * err.array() * recon.array() * (1.0 - recon.array()))
                .matrix();
  grad.W2 += weight * (z.transpose() * d_v);
  grad.b2 += weight * d_v.colwise().sum().transpose();
  Mat d_z = d_v * p.W2.transpose();               // n x m
  Mat d_u = (d_z.array() * z.array() * (1.0 - z.array())).matrix();
  grad.W1 += weight * (s_batch.transpose() * d_u);
  grad.b1 += weight * d_u.colwise().sum().transpose();

  for (Eigen::Index r = 0; r < p.W1.rows(); ++r) {
    double norm = p.W1.row(r).norm();
    if (norm > kL21ZeroRow)
      grad.W1.row(r) += weight * p.lambda * p.W1.row(r) / norm;
  }
  return value;
}

inline std::vector<double> encoder_row_norms(const AutoEncoderParams& p) {
  std::vector<double> norms(p.W1.rows());
  for (Eigen::Index r = 0; r < p.W1.rows(); ++r) norms[r] = p.W1.row(r).norm();
  return norms;
}

// For each removal ratio, the side-information coordinates that survive:
// rows of W1 ranked by norm descending, keeping the top (1-ratio) fraction.
// Retained indices are reported in ascending coordinate order.
inline std::vector<std::pair<double, std::vector<int>>> selection_sweep(
    const AutoEncoderParams& p, const std::vector<double>& ratios) {
  const int k = static_cast<int>(p.W1.rows());
  auto norms = encoder_row_norms(p);
  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (norms[a] != norms[b]) return norms[a] > norms[b];
    return a < b;
  });

  std::vector<std::pair<double, std::vector<int>>> out;
  for (double ratio : ratios) {
    if (ratio < 0.0 || ratio >= 1.0)
      throw ConfigError("removal ratio must lie in [0,1), got " +
                        std::to_string(ratio));
    int keep = k - static_cast<int>(std::floor(ratio * k + 1e-9));
    if (keep < 1) keep = 1;
    std::vector<int> retained(order.begin(), order.begin() + keep);
    std::sort(retained.begin(), retained.end());
    out.emplace_back(ratio, std::move(retained));
  }
  return out;
}

}  // namespace zsbir
