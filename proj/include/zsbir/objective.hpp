#pragma once

// Loss terms of the adversarial cycle-consistency objective, each as a pure
// function of (state, batch) plus a gradient variant that accumulates full
// analytic gradients into a GradState. Values use the saturating adversarial
// form; the non-saturating generator objectives used by the optimizer live
// at the bottom.
//
// Encoded side vectors are recomputed from batch.S_raw inside every term so
// that gradients w.r.t. the side-encoder parameters are exact; batch.S_enc
// only caches the encoding at the parameters the batch was built with.

#include "zsbir/autoencoder.hpp"
#include "zsbir/common.hpp"
#include "zsbir/network.hpp"

#include <string>
#include <vector>

namespace zsbir {

struct Batch {
  Mat X;                    // n x feature_dim, sketch features
  Mat Y;                    // n x feature_dim, image features
  std::vector<int> labels;  // seen-class indices, shared by row i of X and Y
  Mat S_raw;                // n x side_dim, raw class side vectors
  Mat S_enc;                // n x sem_dim, encoded side vectors (cache)

  int size() const { return static_cast<int>(X.rows()); }
};

inline Batch make_batch(const ModelState& state, Mat x, Mat y,
                        std::vector<int> labels, Mat s_raw) {
  Batch b;
  b.X = std::move(x);
  b.Y = std::move(y);
  b.labels = std::move(labels);
  b.S_raw = std::move(s_raw);
  b.S_enc = encode_side_rows(state, b.S_raw);
  return b;
}

inline void validate_batch(const ModelState& state, const Batch& b) {
  const int n = b.size();
  if (n == 0) throw DataError("empty batch");
  if (b.Y.rows() != n || static_cast<int>(b.labels.size()) != n ||
      b.S_raw.rows() != n)
    throw DataError("batch rows disagree across modalities");
  if (b.X.cols() != state.dims.feature_dim ||
      b.Y.cols() != state.dims.feature_dim)
    throw DataError("batch feature dim mismatch");
  for (int c : b.labels)
    if (c < 0 || c >= state.dims.n_seen)
      throw DataError("batch label " + std::to_string(c) +
                      " outside seen-class range");
}

struct LossWeights {
  double adv_se = 1.0, adv_sk = 1.0, adv_im = 1.0;
  double cyc_sk = 1.0, cyc_im = 1.0;
  double cls_sk = 1.0, cls_im = 1.0;
  double aenc = 1.0;
};

// Component fields hold the weighted contributions, so a disabled term
// reads exactly 0 in the training log; with unit weights they equal the
// raw loss values.
struct LossReport {
  double adv_se = 0, adv_sk = 0, adv_im = 0;
  double cyc_sk = 0, cyc_im = 0;
  double cls_sk = 0, cls_im = 0;
  double aenc = 0;
  double total = 0;

  static std::string csv_header() {
    return "step,adv_se,adv_sk,adv_im,cyc_sk,cyc_im,cls_sk,cls_im,aenc,total";
  }
  std::string csv_row(long step) const {
    std::string r = std::to_string(step);
    for (double v : {adv_se, adv_sk, adv_im, cyc_sk, cyc_im, cls_sk, cls_im,
                     aenc, total})
      r += "," + fmt_double(v);
    return r;
  }
};

namespace detail {

inline double clamped_log(double p) {
  if (p < kProbEps) p = kProbEps;
  if (p > 1.0 - kProbEps) p = 1.0 - kProbEps;
  return std::log(p);
}

// dt is d(loss)/d(logit) per row; accumulates parameter gradients into pg
// (when given) and returns d(loss)/d(input) when want_input.
inline Mat disc_backward_rows(const DiscriminatorParams& p, const Mat& v,
                              const Vec& dt, DiscriminatorGrad* pg,
                              bool want_input) {
  Mat u = (v * p.W1.transpose()).rowwise() + p.b1.transpose();
  Mat act = u.unaryExpr(
      [](double x) { return x > 0.0 ? x : kLeakySlope * x; });
  if (pg) {
    pg->w2 += act.transpose() * dt;
    pg->b2 += dt.sum();
  }
  Mat d_act = dt * p.w2.transpose();  // n x h
  Mat d_u = (d_act.array() *
             u.unaryExpr([](double x) { return x > 0.0 ? 1.0 : kLeakySlope; })
                 .array())
                .matrix();
  if (pg) {
    pg->W1 += d_u.transpose() * v;
    pg->b1 += d_u.colwise().sum().transpose();
  }
  if (!want_input) return Mat();
  return d_u * p.W1;
}

inline Mat gen_backward_rows(const GeneratorParams& p, const Mat& x,
                             const Mat& h, const Mat& d_h, GeneratorGrad* pg,
                             bool want_input) {
  Mat d_u = (d_h.array() * (h.array() > 0.0).cast<double>()).matrix();
  if (pg) {
    pg->W += d_u.transpose() * x;
    pg->b += d_u.colwise().sum().transpose();
  }
  if (!want_input) return Mat();
  return d_u * p.W;
}

// encoder half of the side autoencoder; z is the forward output
inline void encoder_backward_rows(const AutoEncoderParams& p, const Mat& s,
                                  const Mat& z, const Mat& d_z,
                                  AutoEncoderGrad* g) {
  Mat d_u = (d_z.array() * z.array() * (1.0 - z.array())).matrix();
  g->W1 += s.transpose() * d_u;
  g->b1 += d_u.colwise().sum().transpose();
}

inline Vec sigmoid_rows(const Vec& logits) {
  return (1.0 / (1.0 + (-logits.array()).exp())).matrix();
}

}  // namespace detail

// ---- semantic adversarial term ----
// 2 E[log D(s)] + E[log(1-D(G_sk(x)))] + E[log(1-D(G_im(y)))], with the
// encoded side vectors acting as the real stream.

inline double adv_semantic_loss(const ModelState& state, const Batch& b) {
  validate_batch(state, b);
  const double n = b.size();
  Mat s_enc = encode_side_rows(state, b.S_raw);
  Vec t_real = discriminator_logit_rows(state.d_sem, s_enc);
  Vec t_fake_sk = discriminator_logit_rows(
      state.d_sem, generator_forward_rows(state.sketch_to_sem, b.X));
  Vec t_fake_im = discriminator_logit_rows(
      state.d_sem, generator_forward_rows(state.image_to_sem, b.Y));
  double v = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    v += 2.0 * detail::clamped_log(sigmoid(t_real(i)));
    v += detail::clamped_log(1.0 - sigmoid(t_fake_sk(i)));
    v += detail::clamped_log(1.0 - sigmoid(t_fake_im(i)));
  }
  return v / n;
}

inline double adv_semantic_grad(const ModelState& state, const Batch& b,
                                GradState& g, double weight = 1.0) {
  validate_batch(state, b);
  const double n = b.size();
  const bool enc = state.dims.encode_side;

  Mat s_enc = encode_side_rows(state, b.S_raw);
  Mat h_sk = generator_forward_rows(state.sketch_to_sem, b.X);
  Mat h_im = generator_forward_rows(state.image_to_sem, b.Y);
  Vec t_real = discriminator_logit_rows(state.d_sem, s_enc);
  Vec t_sk = discriminator_logit_rows(state.d_sem, h_sk);
  Vec t_im = discriminator_logit_rows(state.d_sem, h_im);
  Vec d_real = detail::sigmoid_rows(t_real);
  Vec d_sk = detail::sigmoid_rows(t_sk);
  Vec d_im = detail::sigmoid_rows(t_im);

  double value = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    value += 2.0 * detail::clamped_log(d_real(i));
    value += detail::clamped_log(1.0 - d_sk(i));
    value += detail::clamped_log(1.0 - d_im(i));
  }
  value /= n;

  // d log(sigma(t))/dt = 1 - D; d log(1 - sigma(t))/dt = -D
  Vec dt_real = ((weight * 2.0 / n) * (1.0 - d_real.array())).matrix();
  Vec dt_sk = ((-weight / n) * d_sk.array()).matrix();
  Vec dt_im = ((-weight / n) * d_im.array()).matrix();

  Mat d_senc = detail::disc_backward_rows(state.d_sem, s_enc, dt_real,
                                          &g.d_sem, enc);
  if (enc)
    detail::encoder_backward_rows(state.side_ae, b.S_raw, s_enc, d_senc,
                                  &g.side_ae);
  Mat d_hsk = detail::disc_backward_rows(state.d_sem, h_sk, dt_sk, &g.d_sem,
                                         true);
  detail::gen_backward_rows(state.sketch_to_sem, b.X, h_sk, d_hsk,
                            &g.sketch_to_sem, false);
  Mat d_him = detail::disc_backward_rows(state.d_sem, h_im, dt_im, &g.d_sem,
                                         true);
  detail::gen_backward_rows(state.image_to_sem, b.Y, h_im, d_him,
                            &g.image_to_sem, false);
  return value;
}

// ---- modality adversarial term ----
// E[log D_mod(real feature)] + E[log(1 - D_mod(F_mod(s_enc)))]

inline double adv_modality_loss(const ModelState& state, const Batch& b,
                                Modality mod) {
  validate_batch(state, b);
  const double n = b.size();
  const Mat& real = (mod == Modality::Sketch) ? b.X : b.Y;
  const DiscriminatorParams& disc =
      (mod == Modality::Sketch) ? state.d_sketch : state.d_image;
  const GeneratorParams& dec =
      (mod == Modality::Sketch) ? state.sem_to_sketch : state.sem_to_image;
  Mat s_enc = encode_side_rows(state, b.S_raw);
  Vec t_real = discriminator_logit_rows(disc, real);
  Vec t_fake = discriminator_logit_rows(disc, generator_forward_rows(dec, s_enc));
  double v = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    v += detail::clamped_log(sigmoid(t_real(i)));
    v += detail::clamped_log(1.0 - sigmoid(t_fake(i)));
  }
  return v / n;
}

inline double adv_modality_grad(const ModelState& state, const Batch& b,
                                Modality mod, GradState& g,
                                double weight = 1.0) {
  validate_batch(state, b);
  const double n = b.size();
  const bool enc = state.dims.encode_side;
  const bool sk = (mod == Modality::Sketch);
  const Mat& real = sk ? b.X : b.Y;
  const DiscriminatorParams& disc = sk ? state.d_sketch : state.d_image;
  const GeneratorParams& dec = sk ? state.sem_to_sketch : state.sem_to_image;
  DiscriminatorGrad& disc_g = sk ? g.d_sketch : g.d_image;
  GeneratorGrad& dec_g = sk ? g.sem_to_sketch : g.sem_to_image;

  Mat s_enc = encode_side_rows(state, b.S_raw);
  Mat fake = generator_forward_rows(dec, s_enc);
  Vec t_real = discriminator_logit_rows(disc, real);
  Vec t_fake = discriminator_logit_rows(disc, fake);
  Vec d_real = detail::sigmoid_rows(t_real);
  Vec d_fake = detail::sigmoid_rows(t_fake);

  double value = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    value += detail::clamped_log(d_real(i));
    value += detail::clamped_log(1.0 - d_fake(i));
  }
  value /= n;

  Vec dt_real = ((weight / n) * (1.0 - d_real.array())).matrix();
  Vec dt_fake = ((-weight / n) * d_fake.array()).matrix();

  detail::disc_backward_rows(disc, real, dt_real, &disc_g, false);
  Mat d_fake_in = detail::disc_backward_rows(disc, fake, dt_fake, &disc_g,
                                             true);
  Mat d_senc = detail::gen_backward_rows(dec, s_enc, fake, d_fake_in, &dec_g,
                                         enc);
  if (enc)
    detail::encoder_backward_rows(state.side_ae, b.S_raw, s_enc, d_senc,
                                  &g.side_ae);
  return value;
}

// ---- cycle-consistency term ----
// E||F(G(x)) - x||_1 + E||G(F(s_enc)) - s_enc||_1; mean over the batch,
// sum over coordinates.

inline double cycle_loss(const ModelState& state, const Batch& b,
                         Modality mod) {
  validate_batch(state, b);
  const double n = b.size();
  const bool sk = (mod == Modality::Sketch);
  const Mat& x = sk ? b.X : b.Y;
  const GeneratorParams& to_sem = sk ? state.sketch_to_sem : state.image_to_sem;
  const GeneratorParams& to_feat =
      sk ? state.sem_to_sketch : state.sem_to_image;
  Mat s_enc = encode_side_rows(state, b.S_raw);
  Mat recon_x =
      generator_forward_rows(to_feat, generator_forward_rows(to_sem, x));
  Mat recon_s =
      generator_forward_rows(to_sem, generator_forward_rows(to_feat, s_enc));
  return ((recon_x - x).array().abs().sum() +
          (recon_s - s_enc).array().abs().sum()) /
         n;
}

inline double cycle_grad(const ModelState& state, const Batch& b, Modality mod,
                         GradState& g, double weight = 1.0) {
  validate_batch(state, b);
  const double n = b.size();
  const bool enc = state.dims.encode_side;
  const bool sk = (mod == Modality::Sketch);
  const Mat& x = sk ? b.X : b.Y;
  const GeneratorParams& to_sem = sk ? state.sketch_to_sem : state.image_to_sem;
  const GeneratorParams& to_feat =
      sk ? state.sem_to_sketch : state.sem_to_image;
  GeneratorGrad& to_sem_g = sk ? g.sketch_to_sem : g.image_to_sem;
  GeneratorGrad& to_feat_g = sk ? g.sem_to_sketch : g.sem_to_image;

  Mat s_enc = encode_side_rows(state, b.S_raw);

  // feature -> semantic -> feature
  Mat z1 = generator_forward_rows(to_sem, x);
  Mat xr = generator_forward_rows(to_feat, z1);
  Mat r1 = xr - x;
  // semantic -> feature -> semantic
  Mat f2 = generator_forward_rows(to_feat, s_enc);
  Mat sr = generator_forward_rows(to_sem, f2);
  Mat r2 = sr - s_enc;

  double value = (r1.array().abs().sum() + r2.array().abs().sum()) / n;

  Mat d_xr = (weight / n) * r1.array().sign().matrix();
  Mat d_z1 = detail::gen_backward_rows(to_feat, z1, xr, d_xr, &to_feat_g,
                                       true);
  detail::gen_backward_rows(to_sem, x, z1, d_z1, &to_sem_g, false);

  Mat d_sr = (weight / n) * r2.array().sign().matrix();
  Mat d_f2 = detail::gen_backward_rows(to_sem, f2, sr, d_sr, &to_sem_g, true);
  Mat d_senc = detail::gen_backward_rows(to_feat, s_enc, f2, d_f2, &to_feat_g,
                                         enc);
  if (enc) {
    // s_enc also appears as the reconstruction target
    d_senc -= (weight / n) * r2.array().sign().matrix();
    detail::encoder_backward_rows(state.side_ae, b.S_raw, s_enc, d_senc,
                                  &g.side_ae);
  }
  return value;
}

// ---- classification term ----
// mean cross-entropy of the seen-class head on generated semantic vectors

inline double cls_loss(const ModelState& state, const Batch& b, Modality mod) {
  validate_batch(state, b);
  const double n = b.size();
  const bool sk = (mod == Modality::Sketch);
  const Mat& x = sk ? b.X : b.Y;
  const GeneratorParams& to_sem = sk ? state.sketch_to_sem : state.image_to_sem;
  const ClassifierParams& cls = sk ? state.cls_sketch : state.cls_image;
  Mat z = generator_forward_rows(to_sem, x);
  Mat logits = (z * cls.W).rowwise() + cls.b.transpose();
  double v = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    double mx = logits.row(i).maxCoeff();
    double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    v += lse - logits(i, b.labels[i]);
  }
  return v / n;
}

inline double cls_grad(const ModelState& state, const Batch& b, Modality mod,
                       GradState& g, double weight = 1.0) {
  validate_batch(state, b);
  const double n = b.size();
  const bool sk = (mod == Modality::Sketch);
  const Mat& x = sk ? b.X : b.Y;
  const GeneratorParams& to_sem = sk ? state.sketch_to_sem : state.image_to_sem;
  const ClassifierParams& cls = sk ? state.cls_sketch : state.cls_image;
  GeneratorGrad& to_sem_g = sk ? g.sketch_to_sem : g.image_to_sem;
  ClassifierGrad& cls_g = sk ? g.cls_sketch : g.cls_image;

  Mat z = generator_forward_rows(to_sem, x);
  Mat logits = (z * cls.W).rowwise() + cls.b.transpose();
  Mat probs(logits.rows(), logits.cols());
  double value = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    double mx = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
    double sum = e.sum();
    probs.row(i) = e / sum;
    value += mx + std::log(sum) - logits(i, b.labels[i]);
  }
  value /= n;

  Mat d_logits = probs;
  for (int i = 0; i < b.size(); ++i) d_logits(i, b.labels[i]) -= 1.0;
  d_logits *= weight / n;

  cls_g.W += z.transpose() * d_logits;
  cls_g.b += d_logits.colwise().sum().transpose();
  Mat d_z = d_logits * cls.W.transpose();
  detail::gen_backward_rows(to_sem, x, z, d_z, &to_sem_g, false);
  return value;
}

// ---- combined objective ----

inline LossReport total_loss(const ModelState& state, const Batch& b,
                             const LossWeights& w = {}) {
  LossReport r;
  if (w.adv_se != 0) r.adv_se = w.adv_se * adv_semantic_loss(state, b);
  if (w.adv_sk != 0)
    r.adv_sk = w.adv_sk * adv_modality_loss(state, b, Modality::Sketch);
  if (w.adv_im != 0)
    r.adv_im = w.adv_im * adv_modality_loss(state, b, Modality::Image);
  if (w.cyc_sk != 0)
    r.cyc_sk = w.cyc_sk * cycle_loss(state, b, Modality::Sketch);
  if (w.cyc_im != 0)
    r.cyc_im = w.cyc_im * cycle_loss(state, b, Modality::Image);
  if (w.cls_sk != 0)
    r.cls_sk = w.cls_sk * cls_loss(state, b, Modality::Sketch);
  if (w.cls_im != 0)
    r.cls_im = w.cls_im * cls_loss(state, b, Modality::Image);
  if (w.aenc != 0 && state.dims.encode_side)
    r.aenc = w.aenc * aenc_loss(state.side_ae, b.S_raw);
  r.total = r.adv_se + r.adv_sk + r.adv_im + r.cyc_sk + r.cyc_im + r.cls_sk +
            r.cls_im + r.aenc;
  return r;
}

inline LossReport total_loss_grad(const ModelState& state, const Batch& b,
                                  GradState& g, const LossWeights& w = {}) {
  LossReport r;
  if (w.adv_se != 0)
    r.adv_se = w.adv_se * adv_semantic_grad(state, b, g, w.adv_se);
  if (w.adv_sk != 0)
    r.adv_sk =
        w.adv_sk * adv_modality_grad(state, b, Modality::Sketch, g, w.adv_sk);
  if (w.adv_im != 0)
    r.adv_im =
        w.adv_im * adv_modality_grad(state, b, Modality::Image, g, w.adv_im);
  if (w.cyc_sk != 0)
    r.cyc_sk = w.cyc_sk * cycle_grad(state, b, Modality::Sketch, g, w.cyc_sk);
  if (w.cyc_im != 0)
    r.cyc_im = w.cyc_im * cycle_grad(state, b, Modality::Image, g, w.cyc_im);
  if (w.cls_sk != 0)
    r.cls_sk = w.cls_sk * cls_grad(state, b, Modality::Sketch, g, w.cls_sk);
  if (w.cls_im != 0)
    r.cls_im = w.cls_im * cls_grad(state, b, Modality::Image, g, w.cls_im);
  if (w.aenc != 0 && state.dims.encode_side)
    r.aenc =
        w.aenc * aenc_loss_grad(state.side_ae, b.S_raw, g.side_ae, w.aenc);
  r.total = r.adv_se + r.adv_sk + r.adv_im + r.cyc_sk + r.cyc_im + r.cls_sk +
            r.cls_im + r.aenc;
  return r;
}

// ---- non-saturating generator objectives (optimizer side) ----
// The generator step minimizes -E[log D(fake)] instead of the saturating
// fake terms above; discriminator parameters receive no gradient here.

inline double gen_adv_semantic_grad(const ModelState& state, const Batch& b,
                                    GradState& g, double weight = 1.0) {
  validate_batch(state, b);
  const double n = b.size();
  Mat h_sk = generator_forward_rows(state.sketch_to_sem, b.X);
  Mat h_im = generator_forward_rows(state.image_to_sem, b.Y);
  Vec t_sk = discriminator_logit_rows(state.d_sem, h_sk);
  Vec t_im = discriminator_logit_rows(state.d_sem, h_im);
  Vec d_sk = detail::sigmoid_rows(t_sk);
  Vec d_im = detail::sigmoid_rows(t_im);

  double value = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    value -= detail::clamped_log(d_sk(i));
    value -= detail::clamped_log(d_im(i));
  }
  value /= n;

  // d(-log sigma(t))/dt = D - 1
  Vec dt_sk = ((weight / n) * (d_sk.array() - 1.0)).matrix();
  Vec dt_im = ((weight / n) * (d_im.array() - 1.0)).matrix();
  Mat d_hsk =
      detail::disc_backward_rows(state.d_sem, h_sk, dt_sk, nullptr, true);
  detail::gen_backward_rows(state.sketch_to_sem, b.X, h_sk, d_hsk,
                            &g.sketch_to_sem, false);
  Mat d_him =
      detail::disc_backward_rows(state.d_sem, h_im, dt_im, nullptr, true);
  detail::gen_backward_rows(state.image_to_sem, b.Y, h_im, d_him,
                            &g.image_to_sem, false);
  return value;
}

inline double gen_adv_modality_grad(const ModelState& state, const Batch& b,
                                    Modality mod, GradState& g,
                                    double weight = 1.0) {
  validate_batch(state, b);
  const double n = b.size();
  const bool enc = state.dims.encode_side;
  const bool sk = (mod == Modality::Sketch);
  const DiscriminatorParams& disc = sk ? state.d_sketch : state.d_image;
  const GeneratorParams& dec = sk ? state.sem_to_sketch : state.sem_to_image;
  GeneratorGrad& dec_g = sk ? g.sem_to_sketch : g.sem_to_image;

  Mat s_enc = encode_side_rows(state, b.S_raw);
  Mat fake = generator_forward_rows(dec, s_enc);
  Vec t_fake = discriminator_logit_rows(disc, fake);
  Vec d_fake = detail::sigmoid_rows(t_fake);

  double value = 0.0;
  for (int i = 0; i < b.size(); ++i) value -= detail::clamped_log(d_fake(i));
  value /= n;

  Vec dt = ((weight / n) * (d_fake.array() - 1.0)).matrix();
  Mat d_fake_in = detail::disc_backward_rows(disc, fake, dt, nullptr, true);
  Mat d_senc = detail::gen_backward_rows(dec, s_enc, fake, d_fake_in, &dec_g,
                                         enc);
  if (enc)
    detail::encoder_backward_rows(state.side_ae, b.S_raw, s_enc, d_senc,
                                  &g.side_ae);
  return value;
}

}  // namespace zsbir
