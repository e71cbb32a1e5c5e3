#pragma once

// Per-class side information: word-vector part, hierarchy-similarity part,
// and their concatenation, plus the on-disk class-embedding table format.

#include "zsbir/common.hpp"
#include "zsbir/taxonomy.hpp"
#include "zsbir/word_vectors.hpp"

#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace zsbir {

struct ClassEmbedding {
  std::string class_id;
  Vec text;      // k_text, empty in hierarchy-only mode
  Vec hier;      // |node set|, empty in text-only mode
  Vec combined;  // text ++ hier
};

inline Vec combine_side_info(const Vec& text, const Vec& hier) {
  ensure_finite(text, "side info (text)");
  ensure_finite(hier, "side info (hierarchy)");
  Vec out(text.size() + hier.size());
  out.head(text.size()) = text;
  out.tail(hier.size()) = hier;
  return out;
}

struct SideInfoSpec {
  const WordVectorTable* words = nullptr;  // null: no text part
  const Taxonomy* taxonomy = nullptr;      // null: no hierarchy part
  SimMeasure measure = SimMeasure::Path;
  std::vector<double> ic;  // optional, defaults to intrinsic IC
  std::unordered_map<std::string, std::string> aliases;
};

inline std::string resolve_alias(
    const std::unordered_map<std::string, std::string>& aliases,
    const std::string& name) {
  auto it = aliases.find(name);
  return it == aliases.end() ? name : it->second;
}

// Builds embeddings for the listed classes. The hierarchy node set is the
// union of root paths of the (alias-resolved) classes.
inline std::vector<ClassEmbedding> build_side_info(
    const std::vector<std::string>& classes, const SideInfoSpec& spec) {
  if (!spec.words && !spec.taxonomy)
    throw ConfigError("side info needs a word-vector table, a taxonomy, "
                      "or both");
  std::vector<std::string> node_set;
  if (spec.taxonomy) {
    std::vector<std::string> resolved;
    resolved.reserve(classes.size());
    for (const auto& c : classes)
      resolved.push_back(resolve_alias(spec.aliases, c));
    node_set = build_node_set(*spec.taxonomy, resolved);
  }

  std::vector<ClassEmbedding> out;
  out.reserve(classes.size());
  for (const auto& c : classes) {
    ClassEmbedding e;
    e.class_id = c;
    const std::string name = resolve_alias(spec.aliases, c);
    if (spec.words) e.text = text_embedding(*spec.words, name);
    if (spec.taxonomy)
      e.hier = hierarchical_embedding(*spec.taxonomy, name, node_set,
                                      spec.measure, spec.ic);
    e.combined = combine_side_info(e.text, e.hier);
    out.push_back(std::move(e));
  }
  return out;
}

// ---- class-embedding table file: header "C k", then "class v1 ... vk" ----

inline void save_class_embeddings(const std::string& path,
                                  const std::vector<std::string>& names,
                                  const Mat& vectors,
                                  const std::string& config_hash = "") {
  if (static_cast<Eigen::Index>(names.size()) != vectors.rows())
    throw DataError("class count does not match embedding rows");
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << names.size() << ' ' << vectors.cols() << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << names[i];
    for (Eigen::Index j = 0; j < vectors.cols(); ++j)
      out << ' ' << fmt_double(vectors(static_cast<Eigen::Index>(i), j));
    out << '\n';
  }
  if (!config_hash.empty()) out << "# config " << config_hash << '\n';
  if (!out) throw DataError("write failed: " + path);
}

struct ClassEmbeddingTable {
  std::vector<std::string> names;
  Mat vectors;  // one row per class

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    throw DataError("class '" + name + "' not present in embedding table");
  }
};

inline ClassEmbeddingTable load_class_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw DataError("empty class-embedding file: " + path);
  auto head = split_ws(line);
  if (head.size() != 2)
    throw DataError(path + ": expected header 'C k'");
  long c = std::strtol(head[0].c_str(), nullptr, 10);
  long k = std::strtol(head[1].c_str(), nullptr, 10);
  if (c <= 0 || k <= 0) throw DataError(path + ": bad header counts");

  ClassEmbeddingTable table;
  table.vectors.resize(c, k);
  for (long i = 0; i < c; ++i) {
    if (!std::getline(in, line))
      throw DataError(path + ": expected " + std::to_string(c) +
                      " rows, file ends at row " + std::to_string(i));
    auto toks = split_ws(line);
    if (static_cast<long>(toks.size()) != k + 1)
      throw DataError(path + " line " + std::to_string(i + 2) + ": got " +
                      std::to_string(toks.size() - 1) + " values, expected " +
                      std::to_string(k));
    table.names.push_back(toks[0]);
    for (long j = 0; j < k; ++j) {
      double v;
      if (!parse_double(toks[j + 1], v))
        throw DataError(path + " line " + std::to_string(i + 2) +
                        ": non-numeric entry '" + toks[j + 1] + "'");
      table.vectors(i, j) = v;
    }
  }
  return table;
}

}  // namespace zsbir
