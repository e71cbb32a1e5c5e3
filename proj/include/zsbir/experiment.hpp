#pragma once

// Orchestration on top of the trainer and the retrieval harness: dataset
// evaluation in both retrieval modes, the ablation comparison table, and
// the side-information removal sweep.

#include "zsbir/metrics.hpp"
#include "zsbir/trainer.hpp"

#include <string>
#include <vector>

namespace zsbir {

struct DatasetView {
  Mat features;
  std::vector<std::string> labels;
};

inline DatasetView sketch_queries(const Dataset& ds, bool unseen_only = true) {
  DatasetView v;
  std::vector<int> rows;
  for (std::size_t i = 0; i < ds.sketch_label.size(); ++i)
    if (!unseen_only || !ds.is_seen[ds.sketch_label[i]])
      rows.push_back(static_cast<int>(i));
  v.features.resize(rows.size(), ds.sketch_x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v.features.row(static_cast<Eigen::Index>(i)) = ds.sketch_x.row(rows[i]);
    v.labels.push_back(ds.class_names[ds.sketch_label[rows[i]]]);
  }
  return v;
}

inline DatasetView image_gallery(const Dataset& ds, EvalMode mode) {
  DatasetView v;
  std::vector<int> rows;
  for (std::size_t i = 0; i < ds.image_label.size(); ++i) {
    bool unseen = !ds.is_seen[ds.image_label[i]];
    if (unseen || mode == EvalMode::SeenPlusUnseen)
      rows.push_back(static_cast<int>(i));
  }
  v.features.resize(rows.size(), ds.image_x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v.features.row(static_cast<Eigen::Index>(i)) = ds.image_x.row(rows[i]);
    v.labels.push_back(ds.class_names[ds.image_label[rows[i]]]);
  }
  return v;
}

inline DatasetView train_pool(const Dataset& ds) {
  DatasetView v;
  long n = 0;
  for (std::size_t i = 0; i < ds.sketch_label.size(); ++i)
    n += ds.is_seen[ds.sketch_label[i]];
  for (std::size_t i = 0; i < ds.image_label.size(); ++i)
    n += ds.is_seen[ds.image_label[i]];
  v.features.resize(n, ds.sketch_x.cols());
  long r = 0;
  for (std::size_t i = 0; i < ds.sketch_label.size(); ++i)
    if (ds.is_seen[ds.sketch_label[i]]) {
      v.features.row(r++) = ds.sketch_x.row(static_cast<Eigen::Index>(i));
      v.labels.push_back(ds.class_names[ds.sketch_label[i]]);
    }
  for (std::size_t i = 0; i < ds.image_label.size(); ++i)
    if (ds.is_seen[ds.image_label[i]]) {
      v.features.row(r++) = ds.image_x.row(static_cast<Eigen::Index>(i));
      v.labels.push_back(ds.class_names[ds.image_label[i]]);
    }
  return v;
}

// zero-shot: unseen sketches against unseen images; generalized adds the
// seen-class images as distractors
inline RetrievalResult eval_on_dataset(const ModelState& state,
                                       const Dataset& ds, EvalMode mode,
                                       Metric metric = Metric::Euclidean,
                                       const ItqModel* itq = nullptr) {
  DatasetView q = sketch_queries(ds, /*unseen_only=*/true);
  DatasetView g = image_gallery(ds, mode);
  if (q.features.rows() == 0)
    throw DataError("dataset has no unseen-class sketches to query with");
  return evaluate_model(state, q.features, q.labels, g.features, g.labels,
                        metric, itq);
}

// one shared rotation learned from pooled seen-class sketch+image embeddings
inline ItqModel fit_itq_on_dataset(const ModelState& state, const Dataset& ds,
                                   int iters = 50, std::uint64_t seed = 1) {
  DatasetView pool = train_pool(ds);
  // embed each pooled row with its own modality map: train_pool lists all
  // seen-class sketches first, then the seen-class images
  long n_sk = 0;
  for (std::size_t i = 0; i < ds.sketch_label.size(); ++i)
    n_sk += ds.is_seen[ds.sketch_label[i]];
  Mat emb(pool.features.rows(), state.dims.sem_dim);
  emb.topRows(n_sk) =
      embed_rows(state, pool.features.topRows(n_sk), Modality::Sketch);
  emb.bottomRows(pool.features.rows() - n_sk) = embed_rows(
      state, pool.features.bottomRows(pool.features.rows() - n_sk),
      Modality::Image);
  return fit_itq(emb, iters, seed);
}

struct AblationRow {
  std::string name;
  double map_unseen = 0.0;
};

// the five modified configurations plus the full model
inline std::vector<AblationRow> run_ablation_suite(const Dataset& ds,
                                                   TrainConfig base,
                                                   TrainLog* log = nullptr) {
  const Ablation modes[] = {Ablation::AdvOnly,     Ablation::AdvCyc,
                            Ablation::AdvCls,      Ablation::NoSelection,
                            Ablation::NoL21,       Ablation::None};
  std::vector<AblationRow> rows;
  for (Ablation a : modes) {
    TrainConfig cfg = base;
    cfg.ablation = a;
    Checkpoint ckpt = fit(ds, cfg, log);
    RetrievalResult res =
        eval_on_dataset(ckpt.state, ds, EvalMode::UnseenOnly);
    rows.push_back({ablation_name(a), res.map_all});
  }
  return rows;
}

// keep only the chosen side-information coordinates
inline Dataset reduce_dataset_side(const Dataset& ds,
                                   const std::vector<int>& retained) {
  Dataset out = ds;
  out.side.resize(ds.side.rows(), static_cast<Eigen::Index>(retained.size()));
  for (std::size_t j = 0; j < retained.size(); ++j) {
    if (retained[j] < 0 || retained[j] >= ds.side_dim)
      throw DataError("retained side index out of range");
    out.side.col(static_cast<Eigen::Index>(j)) = ds.side.col(retained[j]);
  }
  out.side_dim = static_cast<int>(retained.size());
  return out;
}

struct SweepRow {
  double ratio = 0.0;
  int retained = 0;
  double map_unseen = 0.0;
};

// Fig-style removal sweep: train once to score coordinates by encoder row
// norm, then retrain and evaluate on each reduced side-information set.
inline std::vector<SweepRow> run_selection_sweep(
    const Dataset& ds, const TrainConfig& base,
    const std::vector<double>& ratios, TrainLog* log = nullptr) {
  Checkpoint full = fit(ds, base, log);
  auto retained_sets = selection_sweep(full.state.side_ae, ratios);
  std::vector<SweepRow> rows;
  for (const auto& [ratio, retained] : retained_sets) {
    Dataset reduced = reduce_dataset_side(ds, retained);
    Checkpoint ckpt = fit(reduced, base, nullptr);
    RetrievalResult res =
        eval_on_dataset(ckpt.state, reduced, EvalMode::UnseenOnly);
    rows.push_back(
        {ratio, static_cast<int>(retained.size()), res.map_all});
  }
  return rows;
}

}  // namespace zsbir
