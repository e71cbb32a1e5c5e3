#pragma once

// Feature-file ingestion, the in-memory dataset (both modalities, a
// seen/unseen class split and per-class side information), and a synthetic
// generator used by the test benchmark: class prototypes in a latent space,
// pushed through fixed random modality maps.

#include "zsbir/common.hpp"
#include "zsbir/side_info.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace zsbir {

struct FeatureSet {
  Mat x;                            // n x d
  std::vector<std::string> labels;  // class name per row
};

// header "N d", then N lines "label v1 ... vd"; '#' lines are ignored
inline FeatureSet load_features(const std::string& path,
                                int expected_dim = 0) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty() && trim(line)[0] != '#') break;
  }
  auto head = split_ws(line);
  if (head.size() != 2)
    throw DataError(path + " line " + std::to_string(lineno) +
                    ": expected header 'N d'");
  long n = std::strtol(head[0].c_str(), nullptr, 10);
  long d = std::strtol(head[1].c_str(), nullptr, 10);
  if (n <= 0 || d <= 0)
    throw DataError(path + ": bad header counts '" + trim(line) + "'");
  if (expected_dim > 0 && d != expected_dim)
    throw DataError(path + ": feature dim " + std::to_string(d) +
                    " does not match configured dim " +
                    std::to_string(expected_dim));

  FeatureSet fs;
  fs.x.resize(n, d);
  long row = 0;
  while (row < n) {
    if (!std::getline(in, line))
      throw DataError(path + ": expected " + std::to_string(n) +
                      " rows, file ends after " + std::to_string(row));
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto toks = split_ws(s);
    if (static_cast<long>(toks.size()) != d + 1)
      throw DataError(path + " line " + std::to_string(lineno) + ": got " +
                      std::to_string(toks.size() - 1) + " values, expected " +
                      std::to_string(d));
    fs.labels.push_back(toks[0]);
    for (long j = 0; j < d; ++j) {
      double v;
      if (!parse_double(toks[j + 1], v))
        throw DataError(path + " line " + std::to_string(lineno) +
                        ": non-numeric entry '" + toks[j + 1] + "'");
      fs.x(row, j) = v;
    }
    ++row;
  }
  return fs;
}

inline void save_features(const std::string& path, const FeatureSet& fs,
                          const std::string& config_hash = "") {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << fs.x.rows() << ' ' << fs.x.cols() << '\n';
  for (Eigen::Index i = 0; i < fs.x.rows(); ++i) {
    out << fs.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < fs.x.cols(); ++j)
      out << ' ' << fmt_double(fs.x(i, j));
    out << '\n';
  }
  if (!config_hash.empty()) out << "# config " << config_hash << '\n';
  if (!out) throw DataError("write failed: " + path);
}

struct SynthConfig {
  int n_seen = 10;
  int n_unseen = 5;
  int samples_per_class = 100;  // per class, per modality
  int feature_dim = 512;
  int side_dim = 48;
  int latent_dim = 8;
  double cluster_spread = 0.25;
  double modality_distortion = 0.3;
  std::uint64_t seed = 7;
};

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<char> is_seen;  // per class
  Mat side;                   // n_classes x side_dim
  Mat sketch_x;               // rows over all classes
  std::vector<int> sketch_label;
  Mat image_x;
  std::vector<int> image_label;
  int feature_dim = 0;
  int side_dim = 0;
  // filled by synthesize_dataset: accuracy of a nearest-class-prototype
  // classifier on the generated features, a separability sanity figure
  double prototype_accuracy = -1.0;

  int n_classes() const { return static_cast<int>(class_names.size()); }
  int n_seen() const {
    int c = 0;
    for (char s : is_seen) c += (s != 0);
    return c;
  }
  std::vector<int> seen_ids() const {
    std::vector<int> out;
    for (int i = 0; i < n_classes(); ++i)
      if (is_seen[i]) out.push_back(i);
    return out;
  }
  std::vector<int> unseen_ids() const {
    std::vector<int> out;
    for (int i = 0; i < n_classes(); ++i)
      if (!is_seen[i]) out.push_back(i);
    return out;
  }

  void validate() const {
    if (class_names.size() != is_seen.size() ||
        static_cast<Eigen::Index>(class_names.size()) != side.rows())
      throw DataError("dataset: class tables disagree");
    std::set<std::string> names(class_names.begin(), class_names.end());
    if (names.size() != class_names.size())
      throw DataError("dataset: duplicate class name");
    // split exclusivity is structural here (one flag per class); the checks
    // below catch label rows escaping the class table
    for (int l : sketch_label)
      if (l < 0 || l >= n_classes())
        throw DataError("dataset: sketch label out of range");
    for (int l : image_label)
      if (l < 0 || l >= n_classes())
        throw DataError("dataset: image label out of range");
    if (sketch_x.cols() != image_x.cols())
      throw DataError("dataset: modality feature dims differ");
  }
};

// Features: relu(A_mod p_c + spread * noise) with A_mod = A + distortion *
// E_mod, so distortion 0 makes the modalities coincide. Side vectors are a
// fixed linear image of the prototypes with a small jitter.
inline Dataset synthesize_dataset(const SynthConfig& cfg) {
  if (cfg.n_seen < 2) throw ConfigError("synth: n_seen must be >= 2");
  if (cfg.n_unseen < 1) throw ConfigError("synth: n_unseen must be >= 1");
  if (cfg.cluster_spread <= 0) throw ConfigError("synth: spread must be > 0");
  if (cfg.samples_per_class < 1 || cfg.feature_dim < 1 || cfg.side_dim < 1 ||
      cfg.latent_dim < 1)
    throw ConfigError("synth: sizes must be positive");

  Rng rng(cfg.seed);
  const int n_classes = cfg.n_seen + cfg.n_unseen;
  const int L = cfg.latent_dim;
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(L));

  Mat a_common(cfg.feature_dim, L), e_sk(cfg.feature_dim, L),
      e_im(cfg.feature_dim, L), b_side(cfg.side_dim, L);
  rng.fill_normal(a_common, 0.0, map_scale);
  rng.fill_normal(e_sk, 0.0, map_scale);
  rng.fill_normal(e_im, 0.0, map_scale);
  rng.fill_normal(b_side, 0.0, map_scale);
  Mat a_sk = a_common + cfg.modality_distortion * e_sk;
  Mat a_im = a_common + cfg.modality_distortion * e_im;

  Mat prototypes(n_classes, L);
  rng.fill_normal(prototypes, 0.0, 1.0);

  Dataset ds;
  ds.feature_dim = cfg.feature_dim;
  ds.side_dim = cfg.side_dim;
  ds.side.resize(n_classes, cfg.side_dim);
  char name[32];
  for (int c = 0; c < n_classes; ++c) {
    std::snprintf(name, sizeof(name), "class%03d", c);
    ds.class_names.push_back(name);
    ds.is_seen.push_back(c < cfg.n_seen ? 1 : 0);
    Vec sv = b_side * prototypes.row(c).transpose();
    for (Eigen::Index j = 0; j < sv.size(); ++j)
      sv(j) += 0.01 * rng.normal();
    ds.side.row(c) = sv.transpose();
  }

  const int per = cfg.samples_per_class;
  ds.sketch_x.resize(n_classes * per, cfg.feature_dim);
  ds.image_x.resize(n_classes * per, cfg.feature_dim);
  for (int c = 0; c < n_classes; ++c) {
    Vec mean_sk = a_sk * prototypes.row(c).transpose();
    Vec mean_im = a_im * prototypes.row(c).transpose();
    for (int i = 0; i < per; ++i) {
      const int row = c * per + i;
      for (Eigen::Index j = 0; j < cfg.feature_dim; ++j) {
        ds.sketch_x(row, j) =
            std::max(0.0, mean_sk(j) + cfg.cluster_spread * rng.normal());
        ds.image_x(row, j) =
            std::max(0.0, mean_im(j) + cfg.cluster_spread * rng.normal());
      }
      ds.sketch_label.push_back(c);
      ds.image_label.push_back(c);
    }
  }

  // nearest-class-prototype accuracy in feature space (relu'd class means)
  Mat mean_sk(n_classes, cfg.feature_dim), mean_im(n_classes, cfg.feature_dim);
  for (int c = 0; c < n_classes; ++c) {
    mean_sk.row(c) =
        (a_sk * prototypes.row(c).transpose()).cwiseMax(0.0).transpose();
    mean_im.row(c) =
        (a_im * prototypes.row(c).transpose()).cwiseMax(0.0).transpose();
  }
  long correct = 0, total = 0;
  auto tally = [&](const Mat& x, const std::vector<int>& labels,
                   const Mat& means) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      int best = 0;
      double best_d = (means.row(0) - x.row(i)).squaredNorm();
      for (int c = 1; c < n_classes; ++c) {
        double d = (means.row(c) - x.row(i)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      correct += (best == labels[static_cast<std::size_t>(i)]);
      ++total;
    }
  };
  tally(ds.sketch_x, ds.sketch_label, mean_sk);
  tally(ds.image_x, ds.image_label, mean_im);
  ds.prototype_accuracy = static_cast<double>(correct) / total;

  ds.validate();
  return ds;
}

// ---- on-disk layout: one directory, plain text files ----

inline void save_dataset(const std::string& dir, const Dataset& ds,
                         const std::string& config_hash = "") {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto features_of = [&](const Mat& x, const std::vector<int>& labels) {
    FeatureSet f;
    f.x = x;
    for (int l : labels) f.labels.push_back(ds.class_names[l]);
    return f;
  };
  save_features(dir + "/sketch.feat",
                features_of(ds.sketch_x, ds.sketch_label), config_hash);
  save_features(dir + "/image.feat", features_of(ds.image_x, ds.image_label),
                config_hash);
  save_class_embeddings(dir + "/sideinfo.txt", ds.class_names, ds.side,
                        config_hash);
  std::ofstream split(dir + "/split.txt");
  if (!split) throw DataError("cannot write split file in " + dir);
  for (int c = 0; c < ds.n_classes(); ++c)
    split << ds.class_names[c] << '\t' << (ds.is_seen[c] ? "seen" : "unseen")
          << '\n';
  if (!config_hash.empty()) split << "# config " << config_hash << '\n';
}

inline Dataset load_dataset(const std::string& dir, int expected_dim = 0) {
  Dataset ds;
  auto side = load_class_embeddings(dir + "/sideinfo.txt");
  ds.class_names = side.names;
  ds.side = side.vectors;
  ds.side_dim = static_cast<int>(ds.side.cols());

  std::ifstream split(dir + "/split.txt");
  if (!split) throw DataError("cannot open " + dir + "/split.txt");
  std::map<std::string, char> seen_of;
  std::string line;
  int lineno = 0;
  while (std::getline(split, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::size_t tab = s.find('\t');
    if (tab == std::string::npos)
      throw DataError(dir + "/split.txt line " + std::to_string(lineno) +
                      ": expected 'class<TAB>seen|unseen'");
    std::string tag = trim(s.substr(tab + 1));
    if (tag != "seen" && tag != "unseen")
      throw DataError(dir + "/split.txt line " + std::to_string(lineno) +
                      ": bad split tag '" + tag + "'");
    seen_of[trim(s.substr(0, tab))] = (tag == "seen") ? 1 : 0;
  }
  for (const auto& name : ds.class_names) {
    auto it = seen_of.find(name);
    if (it == seen_of.end())
      throw DataError("class '" + name + "' missing from split.txt");
    ds.is_seen.push_back(it->second);
  }

  auto ingest = [&](const std::string& path, Mat& x,
                    std::vector<int>& labels) {
    FeatureSet f = load_features(path, expected_dim);
    x = std::move(f.x);
    std::map<std::string, int> id;
    for (int c = 0; c < ds.n_classes(); ++c) id[ds.class_names[c]] = c;
    for (const auto& l : f.labels) {
      auto it = id.find(l);
      if (it == id.end())
        throw DataError(path + ": label '" + l +
                        "' not present in sideinfo.txt");
      labels.push_back(it->second);
    }
  };
  ingest(dir + "/sketch.feat", ds.sketch_x, ds.sketch_label);
  ingest(dir + "/image.feat", ds.image_x, ds.image_label);
  ds.feature_dim = static_cast<int>(ds.sketch_x.cols());
  ds.validate();
  return ds;
}

}  // namespace zsbir
