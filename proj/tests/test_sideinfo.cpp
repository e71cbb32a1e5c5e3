#include "zsbir/side_info.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace zsbir;

namespace {
std::string write_temp(const std::string& name, const std::string& contents) {
  std::string path =
      (std::filesystem::temp_directory_path() / ("zsbir_si_" + name)).string();
  std::ofstream out(path);
  out << contents;
  return path;
}
}  // namespace

TEST_CASE("word vector loading and lookup") {
  auto path = write_temp("vec.txt",
                         "Cat 0.5 1.5 -2\n"
                         "bird 1 0 0\n"
                         "standing 0 1 0\n");
  WordVectorTable table = load_word_vectors(path);
  REQUIRE(table.dim == 3);
  CHECK(table.contains("cat"));  // lowercased on load
  Vec v = text_embedding(table, "CAT");
  CHECK(v(0) == 0.5);
  CHECK(v(2) == -2.0);
  std::remove(path.c_str());
}

TEST_CASE("word vector file errors") {
  auto ragged = write_temp("ragged.txt", "a 1 2\nb 1 2 3\n");
  CHECK_THROWS_AS(load_word_vectors(ragged), DataError);
  std::remove(ragged.c_str());
  auto nonnum = write_temp("nonnum.txt", "a 1 x\n");
  CHECK_THROWS_AS(load_word_vectors(nonnum), DataError);
  std::remove(nonnum.c_str());
}

TEST_CASE("multi-word names average their token vectors") {
  auto path = write_temp("vec2.txt", "bird 1 0 0\nstanding 0 1 0\n");
  WordVectorTable table = load_word_vectors(path);
  Vec v = text_embedding(table, "standing_bird");
  CHECK(v(0) == 0.5);
  CHECK(v(1) == 0.5);
  CHECK(v(2) == 0.0);
  // hyphens split too
  Vec v2 = text_embedding(table, "standing-bird");
  CHECK(v2 == v);
  std::remove(path.c_str());
}

TEST_CASE("missing tokens name the offenders and suggest an alias") {
  auto path = write_temp("vec3.txt", "lantern 1 0\n");
  WordVectorTable table = load_word_vectors(path);
  try {
    text_embedding(table, "jack-o-lantern");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find("jack") != std::string::npos);
    CHECK(msg.find("alias") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("combine_side_info concatenates") {
  Vec text = Vec::LinSpaced(300, 0.0, 1.0);
  Vec hier = Vec::LinSpaced(354, -1.0, 1.0);
  Vec combined = combine_side_info(text, hier);
  REQUIRE(combined.size() == 654);
  CHECK(combined.head(300) == text);
  CHECK(combined.tail(354) == hier);

  // text-only mode leaves the text part unchanged
  Vec empty;
  CHECK(combine_side_info(text, empty) == text);

  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    Vec a(1 + rng.index(40)), b(rng.index(40));
    rng.fill_normal(a, 0, 1);
    rng.fill_normal(b, 0, 1);
    REQUIRE(combine_side_info(a, b).size() == a.size() + b.size());
  }
}

TEST_CASE("build_side_info with aliases and both parts") {
  auto vec_path = write_temp("vec4.txt",
                             "cat 1 0\ndog 0 1\nlantern 0.5 0.5\n");
  WordVectorTable table = load_word_vectors(vec_path);
  Taxonomy tax = taxonomy_from_edges(
      {{"cat", "animal"}, {"dog", "animal"}, {"lantern", "object"},
       {"animal", "entity"}, {"object", "entity"}});
  SideInfoSpec spec;
  spec.words = &table;
  spec.taxonomy = &tax;
  spec.measure = SimMeasure::Path;
  spec.aliases["jack-o-lantern"] = "lantern";

  auto embs = build_side_info({"cat", "dog", "jack-o-lantern"}, spec);
  REQUIRE(embs.size() == 3);
  // node set: entity, animal, object + the three classes = 6 nodes
  REQUIRE(embs[0].hier.size() == 6);
  REQUIRE(embs[0].combined.size() == 2 + 6);
  CHECK(embs[2].text(0) == 0.5);  // alias resolved for the text part
  std::remove(vec_path.c_str());
}

TEST_CASE("class embedding table round-trips") {
  std::vector<std::string> names{"cat", "dog"};
  Mat vectors(2, 4);
  Rng rng(11);
  rng.fill_normal(vectors, 0, 1);
  auto path = (std::filesystem::temp_directory_path() / "zsbir_si_table.txt")
                  .string();
  save_class_embeddings(path, names, vectors, "deadbeef00000000");
  auto table = load_class_embeddings(path);
  REQUIRE(table.names == names);
  REQUIRE(table.vectors == vectors);  // exact: values round-trip via %.17g
  CHECK(table.index_of("dog") == 1);
  CHECK_THROWS_AS(table.index_of("bird"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("class embedding table format errors") {
  auto bad_header = write_temp("t1.txt", "2\ncat 1 2\n");
  CHECK_THROWS_AS(load_class_embeddings(bad_header), DataError);
  std::remove(bad_header.c_str());
  auto short_row = write_temp("t2.txt", "1 3\ncat 1 2\n");
  CHECK_THROWS_AS(load_class_embeddings(short_row), DataError);
  std::remove(short_row.c_str());
  auto missing_row = write_temp("t3.txt", "2 2\ncat 1 2\n");
  CHECK_THROWS_AS(load_class_embeddings(missing_row), DataError);
  std::remove(missing_row.c_str());
}

TEST_CASE("sketchy-shaped node set gives the 654-dim combined embedding") {
  // random tree of exactly 354 nodes; every node is reachable from the
  // leaves, so using all leaves as classes spans the whole tree
  Rng rng(354);
  auto tree = oracle::random_tree(rng, 354);
  Taxonomy tax = taxonomy_from_edges(tree.edges);
  std::set<std::string> parents;
  for (const auto& [c, p] : tree.edges) parents.insert(p);
  std::vector<std::string> leaves;
  for (const auto& n : tree.nodes)
    if (!parents.count(n)) leaves.push_back(n);
  auto node_set = build_node_set(tax, leaves);
  REQUIRE(node_set.size() == 354);

  Vec text = Vec::Zero(300);
  Vec hier =
      hierarchical_embedding(tax, leaves[0], node_set, SimMeasure::Path);
  CHECK(combine_side_info(text, hier).size() == 654);
}
