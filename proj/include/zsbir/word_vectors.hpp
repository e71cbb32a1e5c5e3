#pragma once

// Word-vector table in the plain text layout shared by GloVe and the
// word2vec text export: one "token v1 ... vk" line per word, no header.

#include "zsbir/common.hpp"

#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace zsbir {

struct WordVectorTable {
  int dim = 0;
  std::unordered_map<std::string, Vec> entries;

  bool contains(const std::string& token) const {
    return entries.count(lowercase(token)) > 0;
  }
};

inline WordVectorTable load_word_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word-vector file: " + path);
  WordVectorTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto toks = split_ws(line);
    if (toks.size() < 2)
      throw DataError("word-vector line " + std::to_string(lineno) +
                      ": expected 'token v1 ... vk'");
    int dim = static_cast<int>(toks.size()) - 1;
    if (table.dim == 0)
      table.dim = dim;
    else if (dim != table.dim)
      throw DataError("word-vector line " + std::to_string(lineno) + ": got " +
                      std::to_string(dim) + " values, expected " +
                      std::to_string(table.dim));
    Vec v(dim);
    for (int i = 0; i < dim; ++i) {
      double x;
      if (!parse_double(toks[i + 1], x))
        throw DataError("word-vector line " + std::to_string(lineno) +
                        ": non-numeric entry '" + toks[i + 1] + "'");
      v(i) = x;
    }
    table.entries[lowercase(toks[0])] = std::move(v);
  }
  if (table.entries.empty())
    throw DataError("word-vector file is empty: " + path);
  return table;
}

// Class names split on whitespace, hyphen and underscore; multi-word names
// use the mean of their token vectors. A missing token is an error that
// names the offenders so the user can supply an alias.
inline std::vector<std::string> tokenize_class_name(const std::string& name) {
  std::string s = lowercase(name);
  for (char& c : s)
    if (c == '-' || c == '_') c = ' ';
  auto toks = split_ws(s);
  if (toks.empty()) throw DataError("class name tokenizes to nothing: '" +
                                    name + "'");
  return toks;
}

inline Vec text_embedding(const WordVectorTable& table,
                          const std::string& class_name) {
  auto toks = tokenize_class_name(class_name);
  std::string missing;
  for (const auto& t : toks)
    if (!table.entries.count(t)) missing += (missing.empty() ? "" : ", ") + t;
  if (!missing.empty())
    throw DataError("no word vector for token(s) [" + missing +
                    "] of class '" + class_name +
                    "'; add an alias mapping it to a covered name");
  Vec v = Vec::Zero(table.dim);
  for (const auto& t : toks) v += table.entries.at(t);
  return v / static_cast<double>(toks.size());
}

// Alias file, one "class<TAB>substitute" per line. The substitute is used
// in place of the class name for both the word-vector lookup and the
// taxonomy node.
inline std::unordered_map<std::string, std::string> load_aliases(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open alias file: " + path);
  std::unordered_map<std::string, std::string> aliases;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::size_t tab = s.find('\t');
    if (tab == std::string::npos)
      throw DataError("alias line " + std::to_string(lineno) +
                      ": expected 'class<TAB>substitute'");
    aliases[trim(s.substr(0, tab))] = trim(s.substr(tab + 1));
  }
  return aliases;
}

}  // namespace zsbir
