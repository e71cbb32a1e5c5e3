#pragma once

// Adam with per-tensor moment state. Ascent (the discriminator phase) is
// descent on the negated gradient, passed as scale = -1.

#include "zsbir/common.hpp"
#include "zsbir/network.hpp"

namespace zsbir {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct AdamSlot {
  T m, v;
  long t = 0;

  static AdamSlot zeros_like(const T& p) {
    AdamSlot s;
    s.m = T::Zero(p.rows(), p.cols());
    s.v = T::Zero(p.rows(), p.cols());
    return s;
  }

  void step(T& theta, const T& grad, const AdamConfig& cfg,
            double scale = 1.0) {
    ++t;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * scale * grad;
    v = (cfg.beta2 * v.array() +
         (1.0 - cfg.beta2) * (scale * grad.array()).square())
            .matrix();
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    theta.array() -=
        cfg.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.eps);
  }
};

struct AdamScalar {
  double m = 0, v = 0;
  long t = 0;

  void step(double& theta, double grad, const AdamConfig& cfg,
            double scale = 1.0) {
    ++t;
    const double g = scale * grad;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    theta -= cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.eps);
  }
};

struct GeneratorAdam {
  AdamSlot<Mat> W;
  AdamSlot<Vec> b;
  static GeneratorAdam zeros_like(const GeneratorParams& p) {
    return {AdamSlot<Mat>::zeros_like(p.W), AdamSlot<Vec>::zeros_like(p.b)};
  }
  void step(GeneratorParams& p, const GeneratorGrad& g, const AdamConfig& cfg,
            double scale = 1.0) {
    W.step(p.W, g.W, cfg, scale);
    b.step(p.b, g.b, cfg, scale);
  }
};

struct DiscriminatorAdam {
  AdamSlot<Mat> W1;
  AdamSlot<Vec> b1, w2;
  AdamScalar b2;
  static DiscriminatorAdam zeros_like(const DiscriminatorParams& p) {
    return {AdamSlot<Mat>::zeros_like(p.W1), AdamSlot<Vec>::zeros_like(p.b1),
            AdamSlot<Vec>::zeros_like(p.w2), AdamScalar{}};
  }
  void step(DiscriminatorParams& p, const DiscriminatorGrad& g,
            const AdamConfig& cfg, double scale = 1.0) {
    W1.step(p.W1, g.W1, cfg, scale);
    b1.step(p.b1, g.b1, cfg, scale);
    w2.step(p.w2, g.w2, cfg, scale);
    b2.step(p.b2, g.b2, cfg, scale);
  }
};

struct ClassifierAdam {
  AdamSlot<Mat> W;
  AdamSlot<Vec> b;
  static ClassifierAdam zeros_like(const ClassifierParams& p) {
    return {AdamSlot<Mat>::zeros_like(p.W), AdamSlot<Vec>::zeros_like(p.b)};
  }
  void step(ClassifierParams& p, const ClassifierGrad& g,
            const AdamConfig& cfg, double scale = 1.0) {
    W.step(p.W, g.W, cfg, scale);
    b.step(p.b, g.b, cfg, scale);
  }
};

struct AutoEncoderAdam {
  AdamSlot<Mat> W1, W2;
  AdamSlot<Vec> b1, b2;
  static AutoEncoderAdam zeros_like(const AutoEncoderParams& p) {
    return {AdamSlot<Mat>::zeros_like(p.W1), AdamSlot<Mat>::zeros_like(p.W2),
            AdamSlot<Vec>::zeros_like(p.b1), AdamSlot<Vec>::zeros_like(p.b2)};
  }
  void step(AutoEncoderParams& p, const AutoEncoderGrad& g,
            const AdamConfig& cfg, double scale = 1.0) {
    W1.step(p.W1, g.W1, cfg, scale);
    b1.step(p.b1, g.b1, cfg, scale);
    W2.step(p.W2, g.W2, cfg, scale);
    b2.step(p.b2, g.b2, cfg, scale);
  }
};

// Optimizer state for the whole model, partitioned the same way the
// alternating updates are.
struct ModelAdam {
  GeneratorAdam sketch_to_sem, image_to_sem, sem_to_sketch, sem_to_image;
  DiscriminatorAdam d_sem, d_sketch, d_image;
  ClassifierAdam cls_sketch, cls_image;
  AutoEncoderAdam side_ae;

  static ModelAdam zeros_like(const ModelState& s) {
    ModelAdam a;
    a.sketch_to_sem = GeneratorAdam::zeros_like(s.sketch_to_sem);
    a.image_to_sem = GeneratorAdam::zeros_like(s.image_to_sem);
    a.sem_to_sketch = GeneratorAdam::zeros_like(s.sem_to_sketch);
    a.sem_to_image = GeneratorAdam::zeros_like(s.sem_to_image);
    a.d_sem = DiscriminatorAdam::zeros_like(s.d_sem);
    a.d_sketch = DiscriminatorAdam::zeros_like(s.d_sketch);
    a.d_image = DiscriminatorAdam::zeros_like(s.d_image);
    a.cls_sketch = ClassifierAdam::zeros_like(s.cls_sketch);
    a.cls_image = ClassifierAdam::zeros_like(s.cls_image);
    a.side_ae = AutoEncoderAdam::zeros_like(s.side_ae);
    return a;
  }

  // ascent on the discriminators only
  void apply_discriminator_phase(ModelState& s, const GradState& g,
                                 const AdamConfig& cfg) {
    d_sem.step(s.d_sem, g.d_sem, cfg, -1.0);
    d_sketch.step(s.d_sketch, g.d_sketch, cfg, -1.0);
    d_image.step(s.d_image, g.d_image, cfg, -1.0);
  }

  // descent on generators, side autoencoder and classifier heads
  void apply_generator_phase(ModelState& s, const GradState& g,
                             const AdamConfig& cfg, bool update_classifier,
                             bool update_side_ae) {
    sketch_to_sem.step(s.sketch_to_sem, g.sketch_to_sem, cfg);
    image_to_sem.step(s.image_to_sem, g.image_to_sem, cfg);
    sem_to_sketch.step(s.sem_to_sketch, g.sem_to_sketch, cfg);
    sem_to_image.step(s.sem_to_image, g.sem_to_image, cfg);
    if (update_classifier) {
      cls_sketch.step(s.cls_sketch, g.cls_sketch, cfg);
      cls_image.step(s.cls_image, g.cls_image, cfg);
    }
    if (update_side_ae) side_ae.step(s.side_ae, g.side_ae, cfg);
  }
};

}  // namespace zsbir
