#pragma once

// Independent reference implementations for the test suite: plain
// scalar-loop versions of the forward maps and metrics, brute-force graph
// helpers, and the central-difference gradient checker. Nothing here calls
// back into the code paths under test beyond reading parameter values.

#include "zsbir/common.hpp"
#include "zsbir/network.hpp"
#include "zsbir/objective.hpp"

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using zsbir::Mat;
using zsbir::Vec;

// ---- scalar forward maps ----

inline std::vector<double> relu_fc(const std::vector<std::vector<double>>& w,
                                   const std::vector<double>& b,
                                   const std::vector<double>& v) {
  std::vector<double> out(w.size(), 0.0);
  for (std::size_t r = 0; r < w.size(); ++r) {
    double acc = b[r];
    for (std::size_t c = 0; c < v.size(); ++c) acc += w[r][c] * v[c];
    out[r] = acc > 0.0 ? acc : 0.0;
  }
  return out;
}

inline std::vector<std::vector<double>> to_rows(const Mat& m) {
  std::vector<std::vector<double>> rows(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    rows[r].resize(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) rows[r][c] = m(r, c);
  }
  return rows;
}

inline std::vector<double> to_vec(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline double disc_prob(const zsbir::DiscriminatorParams& p,
                        const std::vector<double>& v) {
  std::vector<double> hidden(p.W1.rows());
  for (Eigen::Index r = 0; r < p.W1.rows(); ++r) {
    double acc = p.b1(r);
    for (std::size_t c = 0; c < v.size(); ++c) acc += p.W1(r, c) * v[c];
    hidden[r] = acc > 0.0 ? acc : 0.2 * acc;
  }
  double logit = p.b2;
  for (Eigen::Index r = 0; r < p.w2.size(); ++r)
    logit += p.w2(r) * hidden[r];
  return 1.0 / (1.0 + std::exp(-logit));
}

inline std::vector<double> softmax_probs(const zsbir::ClassifierParams& p,
                                         const std::vector<double>& z) {
  std::vector<double> logits(p.W.cols());
  for (Eigen::Index c = 0; c < p.W.cols(); ++c) {
    double acc = p.b(c);
    for (std::size_t r = 0; r < z.size(); ++r) acc += p.W(r, c) * z[r];
    logits[c] = acc;
  }
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double sum = 0.0;
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& o : out) o /= sum;
  return out;
}

inline std::vector<double> encode(const zsbir::AutoEncoderParams& p,
                                  const std::vector<double>& s) {
  std::vector<double> z(p.W1.cols());
  for (Eigen::Index j = 0; j < p.W1.cols(); ++j) {
    double acc = p.b1(j);
    for (std::size_t i = 0; i < s.size(); ++i) acc += p.W1(i, j) * s[i];
    z[j] = 1.0 / (1.0 + std::exp(-acc));
  }
  return z;
}

inline std::vector<double> decode(const zsbir::AutoEncoderParams& p,
                                  const std::vector<double>& z) {
  std::vector<double> r(p.W2.cols());
  for (Eigen::Index j = 0; j < p.W2.cols(); ++j) {
    double acc = p.b2(j);
    for (std::size_t i = 0; i < z.size(); ++i) acc += p.W2(i, j) * z[i];
    r[j] = 1.0 / (1.0 + std::exp(-acc));
  }
  return r;
}

inline double aenc_loss(const zsbir::AutoEncoderParams& p,
                        const Mat& batch) {
  double recon = 0.0;
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    std::vector<double> s(batch.cols());
    for (Eigen::Index j = 0; j < batch.cols(); ++j) s[j] = batch(i, j);
    auto r = decode(p, encode(p, s));
    for (Eigen::Index j = 0; j < batch.cols(); ++j) {
      double d = s[j] - r[j];
      recon += d * d;
    }
  }
  recon /= static_cast<double>(batch.rows());
  double l21 = 0.0;
  for (Eigen::Index i = 0; i < p.W1.rows(); ++i) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < p.W1.cols(); ++j)
      sq += p.W1(i, j) * p.W1(i, j);
    l21 += std::sqrt(sq);
  }
  return recon + p.lambda * l21;
}

// ---- brute-force ranking metrics ----

inline double average_precision(const std::vector<char>& rel) {
  long total_rel = 0;
  for (char r : rel) total_rel += (r != 0);
  if (total_rel == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < rel.size(); ++r) {
    if (!rel[r]) continue;
    long hits = 0;
    for (std::size_t j = 0; j <= r; ++j) hits += (rel[j] != 0);
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return sum / static_cast<double>(total_rel);
}

inline double precision_at_k(const std::vector<char>& rel, int k) {
  int cut = std::min<int>(k, static_cast<int>(rel.size()));
  if (cut == 0) return 0.0;
  int hits = 0;
  for (int i = 0; i < cut; ++i) hits += (rel[i] != 0);
  return static_cast<double>(hits) / cut;
}

inline std::vector<double> pr_eleven_points(
    const std::vector<std::vector<char>>& queries) {
  std::vector<double> acc(11, 0.0);
  long used = 0;
  for (const auto& rel : queries) {
    long total_rel = 0;
    for (char r : rel) total_rel += (r != 0);
    if (total_rel == 0) continue;
    ++used;
    for (int g = 0; g <= 10; ++g) {
      double level = g / 10.0;
      double best = 0.0;
      long hits = 0;
      for (std::size_t i = 0; i < rel.size(); ++i) {
        hits += (rel[i] != 0);
        double recall = static_cast<double>(hits) / total_rel;
        double prec = static_cast<double>(hits) / static_cast<double>(i + 1);
        if (recall >= level - 1e-12 && prec > best) best = prec;
      }
      acc[g] += best;
    }
  }
  if (used > 0)
    for (double& a : acc) a /= static_cast<double>(used);
  return acc;
}

inline std::vector<int> rank_by_distance(const std::vector<double>& dist) {
  std::vector<int> order(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });
  return order;
}

// ---- random trees and path brute force ----

struct RandomTree {
  std::vector<std::pair<std::string, std::string>> edges;  // child, parent
  std::vector<std::string> nodes;
  std::map<std::string, std::string> parent;
  std::string root;
};

inline RandomTree random_tree(zsbir::Rng& rng, int n_nodes) {
  RandomTree t;
  std::vector<int> ids(n_nodes);
  for (int i = 0; i < n_nodes; ++i) ids[i] = i;
  rng.shuffle(ids);  // detach name order from structure
  auto name = [](int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "n%03d", i);
    return std::string(buf);
  };
  t.root = name(ids[0]);
  t.nodes.push_back(t.root);
  for (int i = 1; i < n_nodes; ++i) {
    std::string child = name(ids[i]);
    std::string par = name(ids[rng.index(i)]);  // any earlier node
    t.edges.emplace_back(child, par);
    t.parent[child] = par;
    t.nodes.push_back(child);
  }
  return t;
}

inline std::vector<std::string> path_to_root(const RandomTree& t,
                                             const std::string& node) {
  std::vector<std::string> path{node};
  std::string cur = node;
  while (cur != t.root) {
    cur = t.parent.at(cur);
    path.push_back(cur);
  }
  return path;
}

inline std::set<std::string> union_of_paths(
    const RandomTree& t, const std::vector<std::string>& classes) {
  std::set<std::string> s;
  for (const auto& c : classes)
    for (const auto& n : path_to_root(t, c)) s.insert(n);
  return s;
}

// undirected shortest path length via the two root paths
inline int bfs_path_length(const RandomTree& t, const std::string& a,
                           const std::string& b) {
  auto pa = path_to_root(t, a);
  auto pb = path_to_root(t, b);
  std::map<std::string, int> depth_a;
  for (std::size_t i = 0; i < pa.size(); ++i)
    depth_a[pa[i]] = static_cast<int>(i);
  for (std::size_t j = 0; j < pb.size(); ++j) {
    auto it = depth_a.find(pb[j]);
    if (it != depth_a.end())
      return it->second + static_cast<int>(j);
  }
  return -1;  // unreachable in a tree
}

// ---- central-difference gradient checking ----

struct TensorRef {
  std::string name;
  double* data = nullptr;
  long size = 0;
  const double* grad = nullptr;
};

inline std::vector<TensorRef> model_tensors(zsbir::ModelState& s,
                                            zsbir::GradState& g) {
  std::vector<TensorRef> t;
  auto add = [&](const char* n, auto& p, auto& gp) {
    t.push_back({n, p.data(), static_cast<long>(p.size()), gp.data()});
  };
  add("sketch_to_sem.W", s.sketch_to_sem.W, g.sketch_to_sem.W);
  add("sketch_to_sem.b", s.sketch_to_sem.b, g.sketch_to_sem.b);
  add("image_to_sem.W", s.image_to_sem.W, g.image_to_sem.W);
  add("image_to_sem.b", s.image_to_sem.b, g.image_to_sem.b);
  add("sem_to_sketch.W", s.sem_to_sketch.W, g.sem_to_sketch.W);
  add("sem_to_sketch.b", s.sem_to_sketch.b, g.sem_to_sketch.b);
  add("sem_to_image.W", s.sem_to_image.W, g.sem_to_image.W);
  add("sem_to_image.b", s.sem_to_image.b, g.sem_to_image.b);
  add("d_sem.W1", s.d_sem.W1, g.d_sem.W1);
  add("d_sem.b1", s.d_sem.b1, g.d_sem.b1);
  add("d_sem.w2", s.d_sem.w2, g.d_sem.w2);
  t.push_back({"d_sem.b2", &s.d_sem.b2, 1, &g.d_sem.b2});
  add("d_sketch.W1", s.d_sketch.W1, g.d_sketch.W1);
  add("d_sketch.b1", s.d_sketch.b1, g.d_sketch.b1);
  add("d_sketch.w2", s.d_sketch.w2, g.d_sketch.w2);
  t.push_back({"d_sketch.b2", &s.d_sketch.b2, 1, &g.d_sketch.b2});
  add("d_image.W1", s.d_image.W1, g.d_image.W1);
  add("d_image.b1", s.d_image.b1, g.d_image.b1);
  add("d_image.w2", s.d_image.w2, g.d_image.w2);
  t.push_back({"d_image.b2", &s.d_image.b2, 1, &g.d_image.b2});
  add("cls_sketch.W", s.cls_sketch.W, g.cls_sketch.W);
  add("cls_sketch.b", s.cls_sketch.b, g.cls_sketch.b);
  add("cls_image.W", s.cls_image.W, g.cls_image.W);
  add("cls_image.b", s.cls_image.b, g.cls_image.b);
  add("side_ae.W1", s.side_ae.W1, g.side_ae.W1);
  add("side_ae.b1", s.side_ae.b1, g.side_ae.b1);
  add("side_ae.W2", s.side_ae.W2, g.side_ae.W2);
  add("side_ae.b2", s.side_ae.b2, g.side_ae.b2);
  return t;
}

// Random interior-point perturbation: the fc/relu stack is only piecewise
// smooth, so checks run away from the zero-bias kinks.
inline void jitter_model(zsbir::ModelState& s, zsbir::Rng& rng,
                         double amount = 0.05) {
  zsbir::GradState g = zsbir::GradState::zeros_like(s);
  for (auto& t : model_tensors(s, g))
    for (long i = 0; i < t.size; ++i) t.data[i] += rng.uniform(-amount, amount);
}

struct FdReport {
  double worst_rel = 0.0;
  long checked = 0;
  long failed = 0;
  std::string worst_at;
};

template <class LossFn>
inline void fd_check(zsbir::ModelState& s, const std::vector<TensorRef>& tens,
                     LossFn&& loss, FdReport& rep, double tol = 1e-4) {
  for (const auto& t : tens) {
    for (long i = 0; i < t.size; ++i) {
      const double orig = t.data[i];
      const double h = 1e-5 * std::max(1.0, std::abs(orig));
      t.data[i] = orig + h;
      const double lp = loss(s);
      t.data[i] = orig - h;
      const double lm = loss(s);
      t.data[i] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = t.grad[i];
      ++rep.checked;
      const double denom = std::max(std::abs(fd), std::abs(an));
      double rel = 0.0;
      if (std::abs(fd - an) > 1e-8 && denom > 1e-7)
        rel = std::abs(fd - an) / denom;
      if (rel > rep.worst_rel) {
        rep.worst_rel = rel;
        rep.worst_at = t.name + "[" + std::to_string(i) + "]";
      }
      if (rel > tol) ++rep.failed;
    }
  }
}

}  // namespace oracle
