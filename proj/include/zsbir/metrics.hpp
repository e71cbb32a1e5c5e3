#pragma once

// Retrieval harness: deterministic distance ranking, average precision over
// the full ranking, precision@K, 11-point PR curves, and whole-model
// evaluation in zero-shot or generalized (seen distractors) mode.

#include "zsbir/common.hpp"
#include "zsbir/itq.hpp"
#include "zsbir/network.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace zsbir {

enum class Metric { Euclidean, Hamming };

inline Metric parse_metric(const std::string& s) {
  if (s == "euclidean") return Metric::Euclidean;
  if (s == "hamming") return Metric::Hamming;
  throw ConfigError("unknown metric '" + s + "' (euclidean|hamming)");
}

enum class EvalMode { UnseenOnly, SeenPlusUnseen };

inline EvalMode parse_eval_mode(const std::string& s) {
  if (s == "zeroshot" || s == "unseen_only") return EvalMode::UnseenOnly;
  if (s == "generalized" || s == "seen_plus_unseen")
    return EvalMode::SeenPlusUnseen;
  throw ConfigError("unknown eval mode '" + s + "' (zeroshot|generalized)");
}

// ascending distance, ties broken by ascending gallery index
inline std::vector<int> rank_gallery(const Vec& query, const Mat& gallery) {
  if (gallery.cols() != query.size())
    throw DataError("rank_gallery: dim mismatch (query " +
                    std::to_string(query.size()) + ", gallery " +
                    std::to_string(gallery.cols()) + ")");
  std::vector<double> dist(gallery.rows());
  for (Eigen::Index i = 0; i < gallery.rows(); ++i)
    dist[i] = (gallery.row(i).transpose() - query).squaredNorm();
  std::vector<int> order(gallery.rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });
  return order;
}

inline std::vector<int> rank_gallery_hamming(
    const BitCode& query, const std::vector<BitCode>& gallery) {
  std::vector<int> dist(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    if (gallery[i].bits != query.bits)
      throw DataError("rank_gallery: code widths differ");
    dist[i] = hamming_distance(query, gallery[i]);
  }
  std::vector<int> order(gallery.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });
  return order;
}

// AP over the full ranking: (1/R) * sum over relevant ranks of precision@rank
inline double average_precision(const std::vector<char>& ranked_relevance,
                                bool* zero_relevant = nullptr) {
  long relevant = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < ranked_relevance.size(); ++i) {
    if (ranked_relevance[i]) {
      ++relevant;
      sum += static_cast<double>(relevant) / static_cast<double>(i + 1);
    }
  }
  if (relevant == 0) {
    if (zero_relevant) *zero_relevant = true;
    return 0.0;
  }
  return sum / static_cast<double>(relevant);
}

inline double precision_at_k(const std::vector<char>& ranked_relevance,
                             int k = 100) {
  const int n = static_cast<int>(ranked_relevance.size());
  const int cut = std::min(k, n);
  if (cut == 0) return 0.0;
  int hits = 0;
  for (int i = 0; i < cut; ++i) hits += (ranked_relevance[i] != 0);
  return static_cast<double>(hits) / static_cast<double>(cut);
}

// Interpolated precision on the standard 11-point recall grid, averaged
// over queries; queries without relevant items carry no recall curve and
// are skipped.
inline std::vector<std::pair<double, double>> pr_curve(
    const std::vector<std::vector<char>>& per_query_relevance) {
  std::vector<double> acc(11, 0.0);
  long used = 0;
  for (const auto& rel : per_query_relevance) {
    long total_rel = 0;
    for (char r : rel) total_rel += (r != 0);
    if (total_rel == 0) continue;
    ++used;
    // raw precision/recall at each rank, then interpolate
    std::vector<double> prec(rel.size()), recall(rel.size());
    long hits = 0;
    for (std::size_t i = 0; i < rel.size(); ++i) {
      hits += (rel[i] != 0);
      prec[i] = static_cast<double>(hits) / static_cast<double>(i + 1);
      recall[i] = static_cast<double>(hits) / static_cast<double>(total_rel);
    }
    for (int g = 0; g <= 10; ++g) {
      const double level = g / 10.0;
      double best = 0.0;
      for (std::size_t i = 0; i < rel.size(); ++i)
        if (recall[i] >= level - 1e-12 && prec[i] > best) best = prec[i];
      acc[g] += best;
    }
  }
  std::vector<std::pair<double, double>> points;
  for (int g = 0; g <= 10; ++g)
    points.emplace_back(g / 10.0, used > 0 ? acc[g] / used : 0.0);
  return points;
}

struct RetrievalResult {
  std::vector<std::vector<int>> ranked;  // per query, gallery indices
  std::vector<double> ap;                // per query
  std::vector<std::vector<char>> relevance;
  double map_all = 0.0;
  double precision_at_100 = 0.0;
  std::vector<std::pair<double, double>> pr;
  std::map<std::string, double> per_class_map;
  double wall_time_per_query_s = 0.0;  // ranking time only
  long zero_relevant_queries = 0;
};

// Core evaluation on precomputed embeddings. Hamming mode binarizes both
// sides with the given ITQ model.
inline RetrievalResult evaluate_embeddings(
    const Mat& queries, const std::vector<std::string>& query_labels,
    const Mat& gallery, const std::vector<std::string>& gallery_labels,
    Metric metric = Metric::Euclidean, const ItqModel* itq = nullptr,
    int k_at = 100) {
  if (gallery.rows() == 0) throw DataError("evaluate: empty gallery");
  if (queries.rows() == 0) throw DataError("evaluate: no queries");
  if (static_cast<Eigen::Index>(query_labels.size()) != queries.rows() ||
      static_cast<Eigen::Index>(gallery_labels.size()) != gallery.rows())
    throw DataError("evaluate: label count mismatch");
  if (metric == Metric::Hamming && itq == nullptr)
    throw DataError("evaluate: hamming ranking needs an ITQ model");

  RetrievalResult res;
  std::vector<BitCode> q_codes, g_codes;
  if (metric == Metric::Hamming) {
    q_codes = binarize_rows(*itq, queries);
    g_codes = binarize_rows(*itq, gallery);
  }

  const auto t0 = std::chrono::steady_clock::now();
  for (Eigen::Index qi = 0; qi < queries.rows(); ++qi) {
    res.ranked.push_back(metric == Metric::Euclidean
                             ? rank_gallery(queries.row(qi).transpose(),
                                            gallery)
                             : rank_gallery_hamming(q_codes[qi], g_codes));
  }
  const auto t1 = std::chrono::steady_clock::now();
  res.wall_time_per_query_s =
      std::chrono::duration<double>(t1 - t0).count() /
      static_cast<double>(queries.rows());

  std::map<std::string, std::pair<double, long>> class_acc;
  for (Eigen::Index qi = 0; qi < queries.rows(); ++qi) {
    const std::string& ql = query_labels[qi];
    std::vector<char> rel(gallery.rows());
    for (std::size_t r = 0; r < rel.size(); ++r)
      rel[r] = gallery_labels[res.ranked[qi][r]] == ql ? 1 : 0;
    bool zero = false;
    double ap = average_precision(rel, &zero);
    if (zero) ++res.zero_relevant_queries;
    res.ap.push_back(ap);
    res.relevance.push_back(std::move(rel));
    auto& [sum, count] = class_acc[ql];
    sum += ap;
    ++count;
  }
  res.map_all = std::accumulate(res.ap.begin(), res.ap.end(), 0.0) /
                static_cast<double>(res.ap.size());
  double p_sum = 0.0;
  for (const auto& rel : res.relevance) p_sum += precision_at_k(rel, k_at);
  res.precision_at_100 = p_sum / static_cast<double>(res.relevance.size());
  res.pr = pr_curve(res.relevance);
  for (const auto& [cls, acc] : class_acc)
    res.per_class_map[cls] = acc.first / static_cast<double>(acc.second);
  return res;
}

inline Mat embed_rows(const ModelState& state, const Mat& features,
                      Modality mod) {
  return generator_forward_rows(
      mod == Modality::Sketch ? state.sketch_to_sem : state.image_to_sem,
      features);
}

// Sketch queries against an image gallery on a frozen model. In
// SeenPlusUnseen mode the caller passes a gallery that already mixes
// seen-class distractors in; the flag is recorded in the report.
inline RetrievalResult evaluate_model(
    const ModelState& state, const Mat& sketch_features,
    const std::vector<std::string>& sketch_labels, const Mat& image_features,
    const std::vector<std::string>& image_labels,
    Metric metric = Metric::Euclidean, const ItqModel* itq = nullptr) {
  Mat q = embed_rows(state, sketch_features, Modality::Sketch);
  Mat g = embed_rows(state, image_features, Modality::Image);
  return evaluate_embeddings(q, sketch_labels, g, image_labels, metric, itq);
}

inline nlohmann::json metrics_json(const RetrievalResult& res,
                                   EvalMode mode, Metric metric, int sem_dim,
                                   const std::string& config_hash = "") {
  nlohmann::json j;
  j["mode"] =
      mode == EvalMode::UnseenOnly ? "zeroshot" : "generalized";
  j["metric"] = metric == Metric::Euclidean ? "euclidean" : "hamming";
  j["M"] = sem_dim;
  j["mAP_all"] = res.map_all;
  j["precision_at_100"] = res.precision_at_100;
  j["per_class_mAP"] = res.per_class_map;
  j["n_queries"] = res.ap.size();
  j["zero_relevant_queries"] = res.zero_relevant_queries;
  j["wall_time_per_query_s"] = res.wall_time_per_query_s;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  return j;
}

inline void save_pr_csv(const std::string& path,
                        const std::vector<std::pair<double, double>>& pr,
                        const std::string& config_hash = "") {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "recall,precision\n";
  for (const auto& [r, p] : pr)
    out << fmt_double(r) << ',' << fmt_double(p) << '\n';
  if (!config_hash.empty()) out << "# config " << config_hash << '\n';
}

// top-K dump: "query_label,rank,gallery_index,gallery_label,relevant"
inline void save_topk_csv(const std::string& path, const RetrievalResult& res,
                          const std::vector<std::string>& query_labels,
                          const std::vector<std::string>& gallery_labels,
                          int k, const std::string& config_hash = "") {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "query,rank,gallery_index,gallery_label,relevant\n";
  for (std::size_t qi = 0; qi < res.ranked.size(); ++qi) {
    const int cut = std::min<int>(k, static_cast<int>(res.ranked[qi].size()));
    for (int r = 0; r < cut; ++r) {
      int gi = res.ranked[qi][r];
      out << query_labels[qi] << ',' << (r + 1) << ',' << gi << ','
          << gallery_labels[gi] << ','
          << (gallery_labels[gi] == query_labels[qi] ? 1 : 0) << '\n';
    }
  }
  if (!config_hash.empty()) out << "# config " << config_hash << '\n';
}

}  // namespace zsbir
