#pragma once

// Concept hierarchy for class-embedding construction: a rooted tree loaded
// from a "child<TAB>parent" edge list, the node set spanned by a class list,
// and path / Lin / Jiang-Conrath similarities over it.

#include "zsbir/common.hpp"

#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace zsbir {

struct Taxonomy {
  std::vector<std::string> nodes;  // lexicographic order, index = node id
  std::unordered_map<std::string, int> id;
  std::vector<int> parent;  // -1 for the root
  int root = -1;

  // derived on load
  std::vector<int> depth;        // root has depth 0
  std::vector<long> desc_count;  // descendants, node itself included

  int size() const { return static_cast<int>(nodes.size()); }

  int lookup(const std::string& name) const {
    auto it = id.find(name);
    if (it == id.end()) throw DataError("unknown taxonomy node: " + name);
    return it->second;
  }
};

enum class SimMeasure { Path, Lin, Jcn };

inline SimMeasure parse_measure(const std::string& s) {
  if (s == "path") return SimMeasure::Path;
  if (s == "lin") return SimMeasure::Lin;
  if (s == "jcn") return SimMeasure::Jcn;
  throw ConfigError("unknown similarity measure: " + s +
                    " (expected path|lin|jcn)");
}

inline Taxonomy taxonomy_from_edges(
    const std::vector<std::pair<std::string, std::string>>& edges) {
  Taxonomy t;
  std::map<std::string, std::string> parent_of;  // sorted -> stable node order
  std::map<std::string, bool> seen;
  for (const auto& [child, par] : edges) {
    if (child.empty() || par.empty())
      throw DataError("taxonomy edge with empty node name");
    if (child == par) throw DataError("taxonomy self-loop at '" + child + "'");
    auto it = parent_of.find(child);
    if (it != parent_of.end() && it->second != par)
      throw DataError("node '" + child + "' has two parents ('" + it->second +
                      "', '" + par + "')");
    parent_of[child] = par;
    seen[child] = true;
    seen[par] = true;
  }
  if (seen.empty()) throw DataError("taxonomy edge list is empty");

  for (const auto& [name, _] : seen) {
    t.id[name] = static_cast<int>(t.nodes.size());
    t.nodes.push_back(name);
  }
  t.parent.assign(t.nodes.size(), -1);
  for (const auto& [child, par] : parent_of)
    t.parent[t.id[child]] = t.id[par];

  for (int i = 0; i < t.size(); ++i) {
    if (t.parent[i] >= 0) continue;
    if (t.root >= 0)
      throw DataError("taxonomy has multiple roots ('" + t.nodes[t.root] +
                      "', '" + t.nodes[i] + "')");
    t.root = i;
  }
  if (t.root < 0) throw DataError("taxonomy has no root (cycle)");

  // depths; a walk longer than the node count means a parent cycle
  t.depth.assign(t.nodes.size(), -1);
  t.depth[t.root] = 0;
  for (int i = 0; i < t.size(); ++i) {
    int steps = 0;
    int n = i;
    while (t.depth[n] < 0) {
      n = t.parent[n];
      if (n < 0 || ++steps > t.size())
        throw DataError("taxonomy contains a cycle involving '" + t.nodes[i] +
                        "'");
    }
    int base = t.depth[n];
    // second pass fills the walked chain
    int m = i, d = 0;
    std::vector<int> chain;
    while (t.depth[m] < 0) {
      chain.push_back(m);
      m = t.parent[m];
    }
    d = base + static_cast<int>(chain.size());
    for (int c : chain) t.depth[c] = d--;
  }

  t.desc_count.assign(t.nodes.size(), 1);
  // children counted bottom-up: process nodes by decreasing depth
  std::vector<int> order(t.nodes.size());
  for (int i = 0; i < t.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return t.depth[a] > t.depth[b]; });
  for (int n : order)
    if (t.parent[n] >= 0) t.desc_count[t.parent[n]] += t.desc_count[n];

  return t;
}

inline Taxonomy load_taxonomy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open taxonomy file: " + path);
  std::vector<std::pair<std::string, std::string>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::size_t tab = s.find('\t');
    if (tab == std::string::npos)
      throw DataError("taxonomy line " + std::to_string(lineno) +
                      ": expected 'child<TAB>parent'");
    edges.emplace_back(trim(s.substr(0, tab)), trim(s.substr(tab + 1)));
  }
  return taxonomy_from_edges(edges);
}

// Union of root paths for the given classes (classes and root included),
// in lexicographic order so embeddings are reproducible.
inline std::vector<std::string> build_node_set(
    const Taxonomy& tax, const std::vector<std::string>& classes) {
  std::vector<char> in_set(tax.nodes.size(), 0);
  for (const auto& c : classes) {
    int n = tax.lookup(c);
    while (n >= 0) {
      in_set[n] = 1;
      n = tax.parent[n];
    }
  }
  std::vector<std::string> s;
  for (int i = 0; i < tax.size(); ++i)
    if (in_set[i]) s.push_back(tax.nodes[i]);  // nodes already sorted
  return s;
}

// Structure-only information content: IC(n) = 1 - log(desc(n)) / log(N)
// with desc counting the node itself, so IC(root) = 0 and IC(leaf) = 1.
inline double intrinsic_ic(const Taxonomy& tax, int node) {
  if (tax.size() <= 1) return 0.0;
  return 1.0 - std::log(static_cast<double>(tax.desc_count[node])) /
                   std::log(static_cast<double>(tax.size()));
}

inline std::vector<double> intrinsic_ic_all(const Taxonomy& tax) {
  std::vector<double> ic(tax.nodes.size());
  for (int i = 0; i < tax.size(); ++i) ic[i] = intrinsic_ic(tax, i);
  return ic;
}

// Corpus-frequency IC from a "node<TAB>count" file. Counts are summed over
// each subtree; IC(n) = -log(subtree(n) / subtree(root)), normalized so the
// root gets 0 like the intrinsic variant.
inline std::vector<double> corpus_ic(const Taxonomy& tax,
                                     const std::string& freq_path) {
  std::ifstream in(freq_path);
  if (!in) throw DataError("cannot open frequency file: " + freq_path);
  std::vector<double> count(tax.nodes.size(), 0.0);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::size_t tab = s.find('\t');
    if (tab == std::string::npos)
      throw DataError("frequency line " + std::to_string(lineno) +
                      ": expected 'node<TAB>count'");
    double v;
    if (!parse_double(trim(s.substr(tab + 1)), v) || v < 0)
      throw DataError("frequency line " + std::to_string(lineno) +
                      ": bad count");
    count[tax.lookup(trim(s.substr(0, tab)))] += v;
  }
  std::vector<int> order(tax.nodes.size());
  for (int i = 0; i < tax.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return tax.depth[a] > tax.depth[b]; });
  for (int n : order)
    if (tax.parent[n] >= 0) count[tax.parent[n]] += count[n];
  double total = count[tax.root];
  if (total <= 0) throw DataError("frequency file has zero total count");
  std::vector<double> ic(tax.nodes.size());
  for (int i = 0; i < tax.size(); ++i)
    ic[i] = count[i] > 0 ? -std::log(count[i] / total)
                         : -std::log(0.5 / total);  // unseen: half count
  return ic;
}

inline int lowest_common_subsumer(const Taxonomy& tax, int a, int b) {
  while (a != b) {
    if (tax.depth[a] < tax.depth[b])
      b = tax.parent[b];
    else
      a = tax.parent[a];
  }
  return a;
}

inline int tree_path_length(const Taxonomy& tax, int a, int b) {
  int l = lowest_common_subsumer(tax, a, b);
  return tax.depth[a] + tax.depth[b] - 2 * tax.depth[l];
}

// path: 1/(1+d). lin: 2 IC(lcs) / (IC(a)+IC(b)), defined 1 when both ICs
// vanish (root against itself). jcn: distance IC(a)+IC(b)-2 IC(lcs) mapped
// through 1/(1+dist) so it is a similarity in (0,1].
inline double node_similarity(const Taxonomy& tax, int a, int b,
                              SimMeasure measure,
                              const std::vector<double>& ic = {}) {
  auto ic_of = [&](int n) {
    return ic.empty() ? intrinsic_ic(tax, n) : ic[n];
  };
  switch (measure) {
    case SimMeasure::Path:
      return 1.0 / (1.0 + tree_path_length(tax, a, b));
    case SimMeasure::Lin: {
      int l = lowest_common_subsumer(tax, a, b);
      double denom = ic_of(a) + ic_of(b);
      if (denom == 0.0) return 1.0;
      return 2.0 * ic_of(l) / denom;
    }
    case SimMeasure::Jcn: {
      int l = lowest_common_subsumer(tax, a, b);
      double dist = ic_of(a) + ic_of(b) - 2.0 * ic_of(l);
      return 1.0 / (1.0 + dist);
    }
  }
  throw ConfigError("bad similarity measure");
}

inline double node_similarity(const Taxonomy& tax, const std::string& a,
                              const std::string& b, SimMeasure measure,
                              const std::vector<double>& ic) {
  return node_similarity(tax, tax.lookup(a), tax.lookup(b), measure, ic);
}

// Entry j is the similarity between the class and node_set[j].
inline Vec hierarchical_embedding(const Taxonomy& tax,
                                  const std::string& class_node,
                                  const std::vector<std::string>& node_set,
                                  SimMeasure measure,
                                  const std::vector<double>& ic = {}) {
  int c = tax.lookup(class_node);
  Vec v(static_cast<Eigen::Index>(node_set.size()));
  for (std::size_t j = 0; j < node_set.size(); ++j)
    v(static_cast<Eigen::Index>(j)) =
        node_similarity(tax, c, tax.lookup(node_set[j]), measure, ic);
  return v;
}

}  // namespace zsbir
