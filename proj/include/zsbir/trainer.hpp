#pragma once

// Alternating adversarial optimization: per step, disc_steps_per_gen_step
// ascent updates of the three discriminators (saturating objective), then
// one descent update of generators, side autoencoder and classifier heads
// (non-saturating adversarial terms plus cycle, classification and
// autoencoder losses). Includes the checkpoint container.

#include "zsbir/adam.hpp"
#include "zsbir/binio.hpp"
#include "zsbir/config.hpp"
#include "zsbir/dataset.hpp"
#include "zsbir/objective.hpp"

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace zsbir {

enum class Ablation { None, AdvOnly, AdvCyc, AdvCls, NoSelection, NoL21 };

inline Ablation parse_ablation(const std::string& s) {
  if (s == "none" || s == "full") return Ablation::None;
  if (s == "adv_only") return Ablation::AdvOnly;
  if (s == "adv_cyc") return Ablation::AdvCyc;
  if (s == "adv_cls") return Ablation::AdvCls;
  if (s == "no_selection") return Ablation::NoSelection;
  if (s == "no_l21") return Ablation::NoL21;
  throw ConfigError("unknown ablation '" + s +
                    "' (none|adv_only|adv_cyc|adv_cls|no_selection|no_l21)");
}

inline std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::None: return "none";
    case Ablation::AdvOnly: return "adv_only";
    case Ablation::AdvCyc: return "adv_cyc";
    case Ablation::AdvCls: return "adv_cls";
    case Ablation::NoSelection: return "no_selection";
    case Ablation::NoL21: return "no_l21";
  }
  return "?";
}

struct TrainConfig {
  int sem_dim = 64;  // M
  int epochs = 25;
  int batch_size = 32;
  double lr_generator = 1e-4;
  double lr_discriminator = 1e-4;
  LossWeights weights;
  double lambda = 0.5;  // l2,1 strength
  std::uint64_t seed = 1;
  Ablation ablation = Ablation::None;
  int disc_steps_per_gen_step = 1;
  int disc_hidden = 512;
  int aenc_pretrain_epochs = 0;
  bool cls_pretrain = false;

  void validate() const {
    if (sem_dim < 1 || epochs < 0 || batch_size < 1)
      throw ConfigError("train: sizes must be positive");
    if (lr_generator < 0 || lr_discriminator < 0)
      throw ConfigError("train: learning rates must be non-negative");
    if (disc_steps_per_gen_step < 1)
      throw ConfigError("train: disc_steps_per_gen_step must be >= 1");
    if (lambda < 0) throw ConfigError("train: lambda must be non-negative");
  }
};

inline LossWeights effective_weights(const TrainConfig& cfg) {
  LossWeights w = cfg.weights;
  switch (cfg.ablation) {
    case Ablation::AdvOnly:
      w.cyc_sk = w.cyc_im = w.cls_sk = w.cls_im = 0.0;
      break;
    case Ablation::AdvCyc:
      w.cls_sk = w.cls_im = 0.0;
      break;
    case Ablation::AdvCls:
      w.cyc_sk = w.cyc_im = 0.0;
      break;
    case Ablation::NoSelection:
      w.aenc = 0.0;
      break;
    default:
      break;
  }
  return w;
}

inline bool effective_encode_side(const TrainConfig& cfg) {
  return cfg.ablation != Ablation::NoSelection;
}

inline double effective_lambda(const TrainConfig& cfg) {
  return cfg.ablation == Ablation::NoL21 ? 0.0 : cfg.lambda;
}

// ---- config <-> text (checkpoint echo and the JSON sidecar) ----

inline std::string train_config_to_text(const TrainConfig& c) {
  std::map<std::string, std::string> kv;
  kv["train.sem_dim"] = std::to_string(c.sem_dim);
  kv["train.epochs"] = std::to_string(c.epochs);
  kv["train.batch_size"] = std::to_string(c.batch_size);
  kv["train.lr_generator"] = fmt_double(c.lr_generator);
  kv["train.lr_discriminator"] = fmt_double(c.lr_discriminator);
  kv["train.lambda"] = fmt_double(c.lambda);
  kv["train.seed"] = std::to_string(c.seed);
  kv["train.ablation"] = ablation_name(c.ablation);
  kv["train.disc_steps"] = std::to_string(c.disc_steps_per_gen_step);
  kv["train.disc_hidden"] = std::to_string(c.disc_hidden);
  kv["train.aenc_pretrain_epochs"] = std::to_string(c.aenc_pretrain_epochs);
  kv["train.cls_pretrain"] = c.cls_pretrain ? "true" : "false";
  kv["train.w_adv_se"] = fmt_double(c.weights.adv_se);
  kv["train.w_adv_sk"] = fmt_double(c.weights.adv_sk);
  kv["train.w_adv_im"] = fmt_double(c.weights.adv_im);
  kv["train.w_cyc_sk"] = fmt_double(c.weights.cyc_sk);
  kv["train.w_cyc_im"] = fmt_double(c.weights.cyc_im);
  kv["train.w_cls_sk"] = fmt_double(c.weights.cls_sk);
  kv["train.w_cls_im"] = fmt_double(c.weights.cls_im);
  kv["train.w_aenc"] = fmt_double(c.weights.aenc);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

inline TrainConfig train_config_from_config(const Config& cfg) {
  TrainConfig c;
  c.sem_dim = static_cast<int>(cfg.integer("train.sem_dim", c.sem_dim));
  c.epochs = static_cast<int>(cfg.integer("train.epochs", c.epochs));
  c.batch_size = static_cast<int>(cfg.integer("train.batch_size",
                                              c.batch_size));
  c.lr_generator = cfg.num("train.lr_generator", c.lr_generator);
  c.lr_discriminator = cfg.num("train.lr_discriminator", c.lr_discriminator);
  c.lambda = cfg.num("train.lambda", c.lambda);
  c.seed = cfg.seed("train.seed", c.seed);
  c.ablation = parse_ablation(cfg.str("train.ablation", "none"));
  c.disc_steps_per_gen_step =
      static_cast<int>(cfg.integer("train.disc_steps", 1));
  c.disc_hidden = static_cast<int>(cfg.integer("train.disc_hidden",
                                               c.disc_hidden));
  c.aenc_pretrain_epochs = static_cast<int>(
      cfg.integer("train.aenc_pretrain_epochs", 0));
  c.cls_pretrain = cfg.boolean("train.cls_pretrain", false);
  c.weights.adv_se = cfg.num("train.w_adv_se", 1.0);
  c.weights.adv_sk = cfg.num("train.w_adv_sk", 1.0);
  c.weights.adv_im = cfg.num("train.w_adv_im", 1.0);
  c.weights.cyc_sk = cfg.num("train.w_cyc_sk", 1.0);
  c.weights.cyc_im = cfg.num("train.w_cyc_im", 1.0);
  c.weights.cls_sk = cfg.num("train.w_cls_sk", 1.0);
  c.weights.cls_im = cfg.num("train.w_cls_im", 1.0);
  c.weights.aenc = cfg.num("train.w_aenc", 1.0);
  c.validate();
  return c;
}

inline TrainConfig train_config_from_text(const std::string& text) {
  Config cfg;
  for (const auto& line : split(text, '\n')) {
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    cfg.apply_override(s);
  }
  return train_config_from_config(cfg);
}

// ---- one optimization step ----

inline LossReport train_step(ModelState& state, ModelAdam& opt,
                             const Batch& batch, const TrainConfig& cfg) {
  const LossWeights w = effective_weights(cfg);
  const AdamConfig disc_cfg{cfg.lr_discriminator};
  const AdamConfig gen_cfg{cfg.lr_generator};

  LossReport report;

  // discriminator ascent on the saturating adversarial values
  for (int k = 0; k < cfg.disc_steps_per_gen_step; ++k) {
    GradState g = GradState::zeros_like(state);
    double adv_se = 0, adv_sk = 0, adv_im = 0;
    if (w.adv_se != 0)
      adv_se = w.adv_se * adv_semantic_grad(state, batch, g, w.adv_se);
    if (w.adv_sk != 0)
      adv_sk = w.adv_sk *
               adv_modality_grad(state, batch, Modality::Sketch, g, w.adv_sk);
    if (w.adv_im != 0)
      adv_im = w.adv_im *
               adv_modality_grad(state, batch, Modality::Image, g, w.adv_im);
    if (k == 0) {
      report.adv_se = adv_se;
      report.adv_sk = adv_sk;
      report.adv_im = adv_im;
    }
    opt.apply_discriminator_phase(state, g, disc_cfg);
  }

  // generator-side descent; adversarial parts in non-saturating form
  {
    GradState g = GradState::zeros_like(state);
    if (w.adv_se != 0) gen_adv_semantic_grad(state, batch, g, w.adv_se);
    if (w.adv_sk != 0)
      gen_adv_modality_grad(state, batch, Modality::Sketch, g, w.adv_sk);
    if (w.adv_im != 0)
      gen_adv_modality_grad(state, batch, Modality::Image, g, w.adv_im);
    if (w.cyc_sk != 0)
      report.cyc_sk =
          w.cyc_sk * cycle_grad(state, batch, Modality::Sketch, g, w.cyc_sk);
    if (w.cyc_im != 0)
      report.cyc_im =
          w.cyc_im * cycle_grad(state, batch, Modality::Image, g, w.cyc_im);
    if (w.cls_sk != 0)
      report.cls_sk =
          w.cls_sk * cls_grad(state, batch, Modality::Sketch, g, w.cls_sk);
    if (w.cls_im != 0)
      report.cls_im =
          w.cls_im * cls_grad(state, batch, Modality::Image, g, w.cls_im);
    if (w.aenc != 0 && state.dims.encode_side)
      report.aenc = w.aenc * aenc_loss_grad(state.side_ae, batch.S_raw,
                                            g.side_ae, w.aenc);
    opt.apply_generator_phase(state, g, gen_cfg,
                              /*update_classifier=*/!cfg.cls_pretrain,
                              /*update_side_ae=*/state.dims.encode_side);
  }

  report.total = report.adv_se + report.adv_sk + report.adv_im +
                 report.cyc_sk + report.cyc_im + report.cls_sk +
                 report.cls_im + report.aenc;
  if (!std::isfinite(report.total))
    throw NumericError("non-finite loss at step " + std::to_string(state.step) +
                       ": " + report.csv_row(state.step));
  state.step += 1;
  return report;
}

// ---- checkpoint ----

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[5] = "ZSCK";

struct Checkpoint {
  ModelState state;
  TrainConfig config;
  int epoch = 0;
  std::vector<std::string> log_tail;
  std::uint32_t format_version = kCheckpointVersion;
};

inline std::vector<unsigned char> serialize_checkpoint(const Checkpoint& c) {
  ByteWriter w;
  w.bytes().insert(w.bytes().end(), kCheckpointMagic, kCheckpointMagic + 4);
  w.u32(c.format_version);
  const std::string cfg_text = train_config_to_text(c.config);
  w.u64(fnv1a64(cfg_text));
  w.str(cfg_text);
  w.u32(static_cast<std::uint32_t>(c.epoch));
  w.u64(c.state.rng_seed);
  w.u64(static_cast<std::uint64_t>(c.state.step));
  const ModelDims& d = c.state.dims;
  w.u32(d.feature_dim);
  w.u32(d.sem_dim);
  w.u32(d.side_dim);
  w.u32(d.n_seen);
  w.u32(d.disc_hidden);
  w.u8(d.encode_side ? 1 : 0);
  auto put_gen = [&](const GeneratorParams& p) {
    w.mat_f32(p.W);
    w.vec_f32(p.b);
  };
  auto put_disc = [&](const DiscriminatorParams& p) {
    w.mat_f32(p.W1);
    w.vec_f32(p.b1);
    w.vec_f32(p.w2);
    w.f32(static_cast<float>(p.b2));
  };
  auto put_cls = [&](const ClassifierParams& p) {
    w.mat_f32(p.W);
    w.vec_f32(p.b);
  };
  put_gen(c.state.sketch_to_sem);
  put_gen(c.state.image_to_sem);
  put_gen(c.state.sem_to_sketch);
  put_gen(c.state.sem_to_image);
  put_disc(c.state.d_sem);
  put_disc(c.state.d_sketch);
  put_disc(c.state.d_image);
  put_cls(c.state.cls_sketch);
  put_cls(c.state.cls_image);
  w.mat_f32(c.state.side_ae.W1);
  w.vec_f32(c.state.side_ae.b1);
  w.mat_f32(c.state.side_ae.W2);
  w.vec_f32(c.state.side_ae.b2);
  w.u32(static_cast<std::uint32_t>(c.log_tail.size()));
  for (const auto& row : c.log_tail) w.str(row);
  // CRC over everything after the magic
  w.u32(crc32(w.bytes().data() + 4, w.bytes().size() - 4));
  return w.bytes();
}

inline Checkpoint deserialize_checkpoint(
    const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 12 ||
      !std::equal(kCheckpointMagic, kCheckpointMagic + 4, bytes.begin()))
    throw DataError("not a checkpoint file (bad magic)");
  std::uint32_t stored_crc = 0;
  {
    // CRC is the last u32
    std::uint32_t computed = crc32(bytes.data() + 4, bytes.size() - 8);
    const unsigned char* p = bytes.data() + bytes.size() - 4;
    for (int i = 3; i >= 0; --i) stored_crc = (stored_crc << 8) | p[i];
    if (computed != stored_crc)
      throw DataError("corrupt checkpoint: checksum mismatch");
  }
  ByteReader r(bytes);
  for (int i = 0; i < 4; ++i) r.u8();  // magic
  Checkpoint c;
  c.format_version = r.u32();
  if (c.format_version != kCheckpointVersion)
    throw DataError("checkpoint format version " +
                    std::to_string(c.format_version) + " not supported (" +
                    std::to_string(kCheckpointVersion) + " expected)");
  r.u64();  // config hash, informational
  c.config = train_config_from_text(r.str());
  c.epoch = static_cast<int>(r.u32());
  c.state.rng_seed = r.u64();
  c.state.step = static_cast<long>(r.u64());
  ModelDims& d = c.state.dims;
  d.feature_dim = static_cast<int>(r.u32());
  d.sem_dim = static_cast<int>(r.u32());
  d.side_dim = static_cast<int>(r.u32());
  d.n_seen = static_cast<int>(r.u32());
  d.disc_hidden = static_cast<int>(r.u32());
  d.encode_side = r.u8() != 0;
  auto get_gen = [&](GeneratorParams& p) {
    p.W = r.mat_f32();
    p.b = r.vec_f32();
  };
  auto get_disc = [&](DiscriminatorParams& p) {
    p.W1 = r.mat_f32();
    p.b1 = r.vec_f32();
    p.w2 = r.vec_f32();
    p.b2 = r.f32();
  };
  auto get_cls = [&](ClassifierParams& p) {
    p.W = r.mat_f32();
    p.b = r.vec_f32();
  };
  get_gen(c.state.sketch_to_sem);
  get_gen(c.state.image_to_sem);
  get_gen(c.state.sem_to_sketch);
  get_gen(c.state.sem_to_image);
  get_disc(c.state.d_sem);
  get_disc(c.state.d_sketch);
  get_disc(c.state.d_image);
  get_cls(c.state.cls_sketch);
  get_cls(c.state.cls_image);
  c.state.side_ae.W1 = r.mat_f32();
  c.state.side_ae.b1 = r.vec_f32();
  c.state.side_ae.W2 = r.mat_f32();
  c.state.side_ae.b2 = r.vec_f32();
  c.state.side_ae.lambda = effective_lambda(c.config);
  std::uint32_t n_rows = r.u32();
  for (std::uint32_t i = 0; i < n_rows; ++i) c.log_tail.push_back(r.str());
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path,
                            const std::string& config_hash = "") {
  write_file_bytes(path, serialize_checkpoint(c));
  nlohmann::json meta;
  meta["format_version"] = c.format_version;
  meta["epoch"] = c.epoch;
  meta["config_hash"] =
      config_hash.empty() ? hex64(fnv1a64(train_config_to_text(c.config)))
                          : config_hash;
  nlohmann::json cfg;
  for (const auto& line : split(train_config_to_text(c.config), '\n')) {
    if (trim(line).empty()) continue;
    auto eq = line.find('=');
    cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  meta["config"] = cfg;
  std::ofstream out(path + ".json");
  if (!out) throw DataError("cannot write checkpoint metadata: " + path +
                            ".json");
  out << meta.dump(2) << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return deserialize_checkpoint(read_file_bytes(path));
}

inline bool checkpoint_equal(const Checkpoint& a, const Checkpoint& b) {
  return serialize_checkpoint(a) == serialize_checkpoint(b);
}

// ---- full training loop ----

struct TrainLog {
  std::vector<std::string> csv_rows;  // per-step, LossReport::csv_header()
  std::ostream* console = nullptr;    // per-epoch means when set
};

inline Checkpoint fit(const Dataset& ds, const TrainConfig& cfg,
                      TrainLog* log = nullptr) {
  cfg.validate();
  ds.validate();
  const auto seen = ds.seen_ids();
  if (seen.size() < 2)
    throw DataError("training needs >= 2 seen classes, got " +
                    std::to_string(seen.size()));

  // seen-class index remap and per-class sample pools
  std::vector<int> seen_index(ds.n_classes(), -1);
  for (std::size_t i = 0; i < seen.size(); ++i)
    seen_index[seen[i]] = static_cast<int>(i);
  std::vector<int> train_sketches;
  std::vector<std::vector<int>> images_of_class(ds.n_classes());
  for (std::size_t i = 0; i < ds.sketch_label.size(); ++i)
    if (ds.is_seen[ds.sketch_label[i]])
      train_sketches.push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < ds.image_label.size(); ++i)
    if (ds.is_seen[ds.image_label[i]])
      images_of_class[ds.image_label[i]].push_back(static_cast<int>(i));
  for (int c : seen) {
    if (images_of_class[c].empty())
      throw DataError("seen class '" + ds.class_names[c] +
                      "' has no image samples");
  }
  {
    std::vector<long> sketch_count(ds.n_classes(), 0);
    for (int i : train_sketches) ++sketch_count[ds.sketch_label[i]];
    for (int c : seen)
      if (sketch_count[c] == 0)
        throw DataError("seen class '" + ds.class_names[c] +
                        "' has no sketch samples");
  }
  if (cfg.batch_size > static_cast<int>(train_sketches.size()))
    throw DataError("batch size " + std::to_string(cfg.batch_size) +
                    " exceeds training sketch count " +
                    std::to_string(train_sketches.size()));

  const bool encode_side = effective_encode_side(cfg);
  ModelDims dims;
  dims.feature_dim = ds.feature_dim;
  dims.side_dim = ds.side_dim;
  dims.sem_dim = encode_side ? cfg.sem_dim : ds.side_dim;
  dims.n_seen = static_cast<int>(seen.size());
  dims.disc_hidden = cfg.disc_hidden;
  dims.encode_side = encode_side;

  ModelState state = init_model(dims, cfg.seed, effective_lambda(cfg));
  ModelAdam opt = ModelAdam::zeros_like(state);
  Rng data_rng(cfg.seed + 0x517cc1b727220a95ULL);

  Mat seen_side(seen.size(), ds.side_dim);
  for (std::size_t i = 0; i < seen.size(); ++i)
    seen_side.row(static_cast<Eigen::Index>(i)) = ds.side.row(seen[i]);

  // optional warm-up of the side autoencoder on the seen side vectors
  if (encode_side && cfg.aenc_pretrain_epochs > 0) {
    AdamConfig pre_cfg{1e-2};
    AutoEncoderAdam pre_opt = AutoEncoderAdam::zeros_like(state.side_ae);
    for (int e = 0; e < cfg.aenc_pretrain_epochs; ++e) {
      AutoEncoderGrad g = AutoEncoderGrad::zeros_like(state.side_ae);
      aenc_loss_grad(state.side_ae, seen_side, g);
      pre_opt.step(state.side_ae, g, pre_cfg);
    }
  }

  // optional frozen classifier heads trained on encoded side vectors
  if (cfg.cls_pretrain) {
    Mat z = encode_side_rows(state, seen_side);
    AdamConfig pre_cfg{1e-2};
    ClassifierAdam opt_sk = ClassifierAdam::zeros_like(state.cls_sketch);
    ClassifierAdam opt_im = ClassifierAdam::zeros_like(state.cls_image);
    for (int it = 0; it < 500; ++it) {
      for (auto [cls, copt] : {std::pair{&state.cls_sketch, &opt_sk},
                               std::pair{&state.cls_image, &opt_im}}) {
        ClassifierGrad g = ClassifierGrad::zeros_like(*cls);
        Mat logits = (z * cls->W).rowwise() + cls->b.transpose();
        const double n = static_cast<double>(z.rows());
        Mat d_logits(logits.rows(), logits.cols());
        for (Eigen::Index i = 0; i < logits.rows(); ++i) {
          double mx = logits.row(i).maxCoeff();
          Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
          d_logits.row(i) = e / e.sum();
          d_logits(i, i) -= 1.0;  // row i is seen class i
        }
        g.W = z.transpose() * d_logits / n;
        g.b = d_logits.colwise().sum().transpose() / n;
        copt->step(*cls, g, pre_cfg);
      }
    }
  }

  if (log && log->csv_rows.empty())
    log->csv_rows.push_back(LossReport::csv_header());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    data_rng.shuffle(train_sketches);
    LossReport epoch_sum;
    int steps = 0;
    const int n_batches =
        static_cast<int>(train_sketches.size()) / cfg.batch_size;
    for (int bi = 0; bi < n_batches; ++bi) {
      const int n = cfg.batch_size;
      Mat x(n, ds.feature_dim), y(n, ds.feature_dim), s(n, ds.side_dim);
      std::vector<int> labels(n);
      for (int i = 0; i < n; ++i) {
        int si = train_sketches[bi * cfg.batch_size + i];
        int c = ds.sketch_label[si];
        const auto& pool = images_of_class[c];
        int yi = pool[data_rng.index(pool.size())];
        x.row(i) = ds.sketch_x.row(si);
        y.row(i) = ds.image_x.row(yi);
        s.row(i) = ds.side.row(c);
        labels[i] = seen_index[c];
      }
      Batch batch = make_batch(state, std::move(x), std::move(y),
                               std::move(labels), std::move(s));
      LossReport r = train_step(state, opt, batch, cfg);
      if (log) log->csv_rows.push_back(r.csv_row(state.step - 1));
      epoch_sum.adv_se += r.adv_se;
      epoch_sum.adv_sk += r.adv_sk;
      epoch_sum.adv_im += r.adv_im;
      epoch_sum.cyc_sk += r.cyc_sk;
      epoch_sum.cyc_im += r.cyc_im;
      epoch_sum.cls_sk += r.cls_sk;
      epoch_sum.cls_im += r.cls_im;
      epoch_sum.aenc += r.aenc;
      epoch_sum.total += r.total;
      ++steps;
    }
    if (log && log->console && steps > 0) {
      *log->console << "epoch " << (epoch + 1) << "/" << cfg.epochs
                    << " total=" << epoch_sum.total / steps
                    << " cyc=" << (epoch_sum.cyc_sk + epoch_sum.cyc_im) / steps
                    << " cls=" << (epoch_sum.cls_sk + epoch_sum.cls_im) / steps
                    << "\n";
    }
  }

  Checkpoint ckpt;
  ckpt.state = std::move(state);
  ckpt.config = cfg;
  ckpt.epoch = cfg.epochs;
  if (log) {
    const std::size_t keep = 10;
    const auto& rows = log->csv_rows;
    std::size_t start = rows.size() > keep ? rows.size() - keep : 0;
    ckpt.log_tail.assign(rows.begin() + start, rows.end());
  }
  return ckpt;
}

}  // namespace zsbir
