#pragma once

// Forward maps between feature space and the semantic space, the three
// adversarial discriminators, and the seen-class classifier heads, together
// with the bundled trainable state.

#include "zsbir/autoencoder.hpp"
#include "zsbir/common.hpp"

#include <cstdint>
#include <string>

namespace zsbir {

enum class Modality { Sketch, Image };

constexpr double kLeakySlope = 0.2;
constexpr double kProbEps = 1e-12;  // clamp for log-of-probability terms

// fc layer + ReLU; W is (out x in)
struct GeneratorParams {
  Mat W;
  Vec b;

  int in_dim() const { return static_cast<int>(W.cols()); }
  int out_dim() const { return static_cast<int>(W.rows()); }
};

inline Vec generator_forward(const GeneratorParams& p, const Vec& v) {
  if (v.size() != p.W.cols())
    throw DataError("generator: input dim " + std::to_string(v.size()) +
                    ", expected " + std::to_string(p.W.cols()));
  return (p.W * v + p.b).cwiseMax(0.0);
}

// rows of X are samples
inline Mat generator_forward_rows(const GeneratorParams& p, const Mat& x) {
  if (x.cols() != p.W.cols())
    throw DataError("generator: input dim " + std::to_string(x.cols()) +
                    ", expected " + std::to_string(p.W.cols()));
  Mat u = (x * p.W.transpose()).rowwise() + p.b.transpose();
  return u.cwiseMax(0.0);
}

// two fc layers: leaky-ReLU hidden, single logit out
struct DiscriminatorParams {
  Mat W1;  // h x in
  Vec b1;  // h
  Vec w2;  // h
  double b2 = 0.0;

  int in_dim() const { return static_cast<int>(W1.cols()); }
  int hidden_dim() const { return static_cast<int>(W1.rows()); }
};

inline double discriminator_logit(const DiscriminatorParams& p, const Vec& v) {
  if (v.size() != p.W1.cols())
    throw DataError("discriminator: input dim " + std::to_string(v.size()) +
                    ", expected " + std::to_string(p.W1.cols()));
  Vec u = p.W1 * v + p.b1;
  Vec a = u.unaryExpr(
      [](double x) { return x > 0.0 ? x : kLeakySlope * x; });
  return p.w2.dot(a) + p.b2;
}

inline Vec discriminator_logit_rows(const DiscriminatorParams& p,
                                    const Mat& x) {
  if (x.cols() != p.W1.cols())
    throw DataError("discriminator: input dim " + std::to_string(x.cols()) +
                    ", expected " + std::to_string(p.W1.cols()));
  Mat u = (x * p.W1.transpose()).rowwise() + p.b1.transpose();
  Mat a = u.unaryExpr(
      [](double v) { return v > 0.0 ? v : kLeakySlope * v; });
  return ((a * p.w2).array() + p.b2).matrix();
}

inline double discriminator_forward(const DiscriminatorParams& p,
                                    const Vec& v) {
  return sigmoid(discriminator_logit(p, v));
}

// W is (sem_dim x n_classes): one column of logit weights per seen class
struct ClassifierParams {
  Mat W;
  Vec b;

  int n_classes() const { return static_cast<int>(W.cols()); }
};

inline Vec classifier_logits(const ClassifierParams& p, const Vec& z) {
  if (z.size() != p.W.rows())
    throw DataError("classifier: input dim " + std::to_string(z.size()) +
                    ", expected " + std::to_string(p.W.rows()));
  return p.W.transpose() * z + p.b;
}

inline Vec softmax(const Vec& logits) {
  Vec shifted = logits.array() - logits.maxCoeff();
  Vec e = shifted.array().exp();
  return e / e.sum();
}

inline Vec classifier_forward(const ClassifierParams& p, const Vec& z) {
  return softmax(classifier_logits(p, z));
}

struct ModelDims {
  int feature_dim = 512;
  int sem_dim = 64;    // M
  int side_dim = 0;    // k; 0 until side info is known
  int n_seen = 0;
  int disc_hidden = 512;
  bool encode_side = true;  // false: semantic space is raw side info (M = k)

  bool operator==(const ModelDims&) const = default;
};

struct ModelState {
  ModelDims dims;
  GeneratorParams sketch_to_sem, image_to_sem;  // 512 -> M
  GeneratorParams sem_to_sketch, sem_to_image;  // M -> 512
  DiscriminatorParams d_sem, d_sketch, d_image;
  ClassifierParams cls_sketch, cls_image;
  AutoEncoderParams side_ae;
  std::uint64_t rng_seed = 0;
  long step = 0;
};

namespace detail {
inline GeneratorParams init_generator(int in, int out, Rng& rng) {
  GeneratorParams p;
  double a = 1.0 / std::sqrt(static_cast<double>(in));
  p.W.resize(out, in);
  rng.fill_uniform(p.W, -a, a);
  p.b = Vec::Zero(out);
  return p;
}

inline DiscriminatorParams init_discriminator(int in, int hidden, Rng& rng) {
  DiscriminatorParams p;
  double a1 = 1.0 / std::sqrt(static_cast<double>(in));
  double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  p.W1.resize(hidden, in);
  rng.fill_uniform(p.W1, -a1, a1);
  p.b1 = Vec::Zero(hidden);
  p.w2.resize(hidden);
  rng.fill_uniform(p.w2, -a2, a2);
  p.b2 = 0.0;
  return p;
}

inline ClassifierParams init_classifier(int sem_dim, int n_classes, Rng& rng) {
  ClassifierParams p;
  double a = 1.0 / std::sqrt(static_cast<double>(sem_dim));
  p.W.resize(sem_dim, n_classes);
  rng.fill_uniform(p.W, -a, a);
  p.b = Vec::Zero(n_classes);
  return p;
}
}  // namespace detail

// Weights ~ uniform with fan-in scaling, biases zero; a fixed draw order
// makes the state a pure function of (dims, seed).
inline ModelState init_model(const ModelDims& dims, std::uint64_t seed,
                             double side_lambda = 0.5) {
  if (dims.sem_dim < 1) throw ConfigError("sem_dim must be >= 1");
  if (dims.feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
  if (dims.n_seen < 1) throw ConfigError("n_seen must be >= 1");
  ModelState s;
  s.dims = dims;
  if (!dims.encode_side && dims.side_dim > 0 &&
      dims.sem_dim != dims.side_dim)
    throw ConfigError("with the side encoder disabled, sem_dim must equal "
                      "side_dim");
  Rng rng(seed);
  const int d = dims.feature_dim, m = dims.sem_dim;
  s.sketch_to_sem = detail::init_generator(d, m, rng);
  s.image_to_sem = detail::init_generator(d, m, rng);
  s.sem_to_sketch = detail::init_generator(m, d, rng);
  s.sem_to_image = detail::init_generator(m, d, rng);
  s.d_sem = detail::init_discriminator(m, dims.disc_hidden, rng);
  s.d_sketch = detail::init_discriminator(d, dims.disc_hidden, rng);
  s.d_image = detail::init_discriminator(d, dims.disc_hidden, rng);
  s.cls_sketch = detail::init_classifier(m, dims.n_seen, rng);
  s.cls_image = detail::init_classifier(m, dims.n_seen, rng);
  const int k = dims.side_dim > 0 ? dims.side_dim : m;
  s.side_ae = init_autoencoder(k, m, side_lambda, rng);
  s.rng_seed = seed;
  s.step = 0;
  return s;
}

// Encoded side vectors: rows of s_raw through the side autoencoder, or the
// raw rows themselves when the encoder is bypassed.
inline Mat encode_side_rows(const ModelState& state, const Mat& s_raw) {
  if (!state.dims.encode_side) return s_raw;
  return aenc_encode_rows(state.side_ae, s_raw);
}

// ---- gradient mirror ----

struct GeneratorGrad {
  Mat W;
  Vec b;
  static GeneratorGrad zeros_like(const GeneratorParams& p) {
    return {Mat::Zero(p.W.rows(), p.W.cols()), Vec::Zero(p.b.size())};
  }
};

struct DiscriminatorGrad {
  Mat W1;
  Vec b1;
  Vec w2;
  double b2 = 0.0;
  static DiscriminatorGrad zeros_like(const DiscriminatorParams& p) {
    return {Mat::Zero(p.W1.rows(), p.W1.cols()), Vec::Zero(p.b1.size()),
            Vec::Zero(p.w2.size()), 0.0};
  }
};

struct ClassifierGrad {
  Mat W;
  Vec b;
  static ClassifierGrad zeros_like(const ClassifierParams& p) {
    return {Mat::Zero(p.W.rows(), p.W.cols()), Vec::Zero(p.b.size())};
  }
};

struct GradState {
  GeneratorGrad sketch_to_sem, image_to_sem, sem_to_sketch, sem_to_image;
  DiscriminatorGrad d_sem, d_sketch, d_image;
  ClassifierGrad cls_sketch, cls_image;
  AutoEncoderGrad side_ae;

  static GradState zeros_like(const ModelState& s) {
    GradState g;
    g.sketch_to_sem = GeneratorGrad::zeros_like(s.sketch_to_sem);
    g.image_to_sem = GeneratorGrad::zeros_like(s.image_to_sem);
    g.sem_to_sketch = GeneratorGrad::zeros_like(s.sem_to_sketch);
    g.sem_to_image = GeneratorGrad::zeros_like(s.sem_to_image);
    g.d_sem = DiscriminatorGrad::zeros_like(s.d_sem);
    g.d_sketch = DiscriminatorGrad::zeros_like(s.d_sketch);
    g.d_image = DiscriminatorGrad::zeros_like(s.d_image);
    g.cls_sketch = ClassifierGrad::zeros_like(s.cls_sketch);
    g.cls_image = ClassifierGrad::zeros_like(s.cls_image);
    g.side_ae = AutoEncoderGrad::zeros_like(s.side_ae);
    return g;
  }
};

}  // namespace zsbir
