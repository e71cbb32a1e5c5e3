#include "zsbir/config.hpp"
#include "zsbir/experiment.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

using namespace zsbir;

namespace {

namespace fs = std::filesystem;

std::string scratch_dir() {
  auto dir = fs::temp_directory_path() / "zsbir_pipeline";
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(ZSBIR_CLI) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

Dataset bench_dataset() {
  SynthConfig cfg;
  cfg.n_seen = 4;
  cfg.n_unseen = 2;
  cfg.samples_per_class = 10;
  cfg.feature_dim = 24;
  cfg.side_dim = 10;
  cfg.latent_dim = 4;
  cfg.seed = 31;
  return synthesize_dataset(cfg);
}

TrainConfig bench_config() {
  TrainConfig cfg;
  cfg.sem_dim = 6;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.disc_hidden = 8;
  cfg.seed = 4;
  return cfg;
}

}  // namespace

TEST_CASE("config file parsing, overrides and hashing") {
  auto path = scratch_dir() + "/cfg.txt";
  {
    std::ofstream out(path);
    out << "# comment\n"
        << "train.lr_generator=0.0001\n"
        << "data.dir = /tmp/somewhere \n"
        << "\n"
        << "train.epochs=7\n";
  }
  Config cfg = Config::from_file(path);
  CHECK(cfg.num("train.lr_generator", 0) == 0.0001);
  CHECK(cfg.str("data.dir", "") == "/tmp/somewhere");
  CHECK(cfg.integer("train.epochs", 0) == 7);
  CHECK(cfg.integer("train.batch_size", 32) == 32);  // default

  cfg.apply_override("train.epochs=9");
  CHECK(cfg.integer("train.epochs", 0) == 9);

  Config other = Config::from_file(path);
  other.apply_override("train.epochs=9");
  CHECK(cfg.hash_hex() == other.hash_hex());
  other.apply_override("train.epochs=10");
  CHECK(cfg.hash_hex() != other.hash_hex());

  CHECK_THROWS_AS(cfg.integer("data.dir", 0), ConfigError);
  CHECK_THROWS_AS(cfg.apply_override("no-equals-sign"), ConfigError);
  CHECK_THROWS_AS(Config::from_file("/nonexistent/zsbir.cfg"), ConfigError);
}

TEST_CASE("train config echoes through text exactly") {
  TrainConfig cfg = bench_config();
  cfg.weights.cyc_sk = 2.5;
  cfg.ablation = Ablation::AdvCyc;
  cfg.lambda = 0.125;
  TrainConfig back = train_config_from_text(train_config_to_text(cfg));
  CHECK(train_config_to_text(back) == train_config_to_text(cfg));
  CHECK(back.ablation == Ablation::AdvCyc);
  CHECK(back.weights.cyc_sk == 2.5);
}

TEST_CASE("eval_on_dataset composes the right galleries") {
  Dataset ds = bench_dataset();
  Checkpoint ckpt = fit(ds, bench_config());

  auto zs = eval_on_dataset(ckpt.state, ds, EvalMode::UnseenOnly);
  auto gen = eval_on_dataset(ckpt.state, ds, EvalMode::SeenPlusUnseen);
  // 2 unseen classes x 10 sketches
  CHECK(zs.ap.size() == 20);
  // zero-shot gallery: 20 unseen images; generalized adds 40 seen images
  CHECK(zs.relevance[0].size() == 20);
  CHECK(gen.relevance[0].size() == 60);
  CHECK(gen.map_all <= zs.map_all);
}

TEST_CASE("ablation suite emits six rows") {
  Dataset ds = bench_dataset();
  TrainConfig cfg = bench_config();
  cfg.epochs = 1;
  auto rows = run_ablation_suite(ds, cfg);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].name == "adv_only");
  CHECK(rows[5].name == "none");
  for (const auto& r : rows) {
    CHECK(r.map_unseen >= 0.0);
    CHECK(r.map_unseen <= 1.0);
  }
}

TEST_CASE("selection sweep retrains on reduced side info") {
  Dataset ds = bench_dataset();
  TrainConfig cfg = bench_config();
  cfg.epochs = 1;
  auto rows = run_selection_sweep(ds, cfg, {0.0, 0.3});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].retained == 10);
  CHECK(rows[1].retained == 7);
  CHECK(rows[1].map_unseen >= 0.0);

  auto reduced = reduce_dataset_side(ds, {0, 2, 5});
  CHECK(reduced.side_dim == 3);
  CHECK(reduced.side.col(1) == ds.side.col(2));
  CHECK_THROWS_AS(reduce_dataset_side(ds, {99}), DataError);
}

TEST_CASE("cli end-to-end: synth, train, embed, itq, retrieve, eval") {
  const std::string dir = scratch_dir() + "/e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);

  REQUIRE(run_cli("synth-data --out " + dir +
                  "/data --set synth.n_seen=4 --set synth.n_unseen=2"
                  " --set synth.samples_per_class=8"
                  " --set synth.feature_dim=24 --set synth.side_dim=10"
                  " --set synth.latent_dim=4 --set synth.seed=3") == 0);
  REQUIRE(fs::exists(dir + "/data/sketch.feat"));

  REQUIRE(run_cli("train --data " + dir + "/data --out " + dir +
                  "/model.ckpt --log " + dir +
                  "/log.csv --set train.sem_dim=6 --set train.epochs=2"
                  " --set train.batch_size=8 --set train.disc_hidden=8") ==
          0);
  REQUIRE(fs::exists(dir + "/model.ckpt"));
  REQUIRE(fs::exists(dir + "/model.ckpt.json"));
  {
    std::string log = slurp(dir + "/log.csv");
    CHECK(log.find("step,adv_se,adv_sk,adv_im,cyc_sk,cyc_im,cls_sk,cls_im,"
                   "aenc,total") == 0);
  }

  REQUIRE(run_cli("embed --checkpoint " + dir + "/model.ckpt --features " +
                  dir + "/data/sketch.feat --modality sketch --out " + dir +
                  "/sk.emb") == 0);
  REQUIRE(run_cli("embed --checkpoint " + dir + "/model.ckpt --features " +
                  dir + "/data/image.feat --modality image --out " + dir +
                  "/im.emb") == 0);

  REQUIRE(run_cli("fit-itq --embeddings " + dir + "/sk.emb --embeddings " +
                  dir + "/im.emb --out " + dir + "/itq.txt --codes") == 0);
  REQUIRE(fs::exists(dir + "/itq.txt"));
  REQUIRE(fs::exists(dir + "/sk.emb.codes"));

  REQUIRE(run_cli("retrieve --queries " + dir + "/sk.emb --gallery " + dir +
                  "/im.emb --topk 5 --out " + dir + "/topk.csv") == 0);
  CHECK(slurp(dir + "/topk.csv")
            .find("query,rank,gallery_index,gallery_label,relevant") == 0);

  REQUIRE(run_cli("eval --queries " + dir + "/sk.emb --gallery " + dir +
                  "/im.emb --out " + dir + "/metrics.json --pr " + dir +
                  "/pr.csv") == 0);
  auto metrics = nlohmann::json::parse(slurp(dir + "/metrics.json"));
  CHECK(metrics.contains("mAP_all"));
  CHECK(metrics.contains("precision_at_100"));
  CHECK(metrics.contains("per_class_mAP"));
  CHECK(metrics.contains("config_hash"));
  CHECK(metrics["metric"] == "euclidean");

  // hamming evaluation through the ITQ model
  REQUIRE(run_cli("eval --queries " + dir + "/sk.emb --gallery " + dir +
                  "/im.emb --metric hamming --itq " + dir + "/itq.txt" +
                  " --out " + dir + "/metrics_h.json --pr " + dir +
                  "/pr_h.csv") == 0);

  // re-running the identical command is byte-identical modulo wall time
  auto m1 = nlohmann::json::parse(slurp(dir + "/metrics.json"));
  std::string pr1 = slurp(dir + "/pr.csv");
  REQUIRE(run_cli("eval --queries " + dir + "/sk.emb --gallery " + dir +
                  "/im.emb --out " + dir + "/metrics.json --pr " + dir +
                  "/pr.csv") == 0);
  auto m2 = nlohmann::json::parse(slurp(dir + "/metrics.json"));
  m1.erase("wall_time_per_query_s");
  m2.erase("wall_time_per_query_s");
  CHECK(m1.dump() == m2.dump());
  CHECK(pr1 == slurp(dir + "/pr.csv"));
}

TEST_CASE("cli exit codes distinguish config and data errors") {
  const std::string dir = scratch_dir();
  // unknown subcommand / bad flags: config error (2)
  CHECK(run_cli("no-such-mode") == 2);
  // missing upstream artifact: data error (3) with a hint
  CHECK(run_cli("train --data " + dir + "/missing-data") == 3);
  // bad metric name: config error
  CHECK(run_cli("eval --queries nope.emb --gallery nope.emb --metric "
                "cosine") == 2);
  // nonexistent inputs: data error
  CHECK(run_cli("eval --queries nope.emb --gallery nope.emb") == 3);
}

TEST_CASE("cli build-sideinfo with files") {
  const std::string dir = scratch_dir() + "/side";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream tax(dir + "/tax.txt");
    tax << "cat\tanimal\ndog\tanimal\nanimal\tentity\n";
    std::ofstream vec(dir + "/vec.txt");
    vec << "cat 1 0 0\ndog 0 1 0\n";
    std::ofstream cls(dir + "/classes.txt");
    cls << "cat\ndog\n";
  }
  REQUIRE(run_cli("build-sideinfo --classes " + dir + "/classes.txt" +
                  " --taxonomy " + dir + "/tax.txt --vectors " + dir +
                  "/vec.txt --text word2vec --measure jcn --out " + dir +
                  "/side.txt") == 0);
  auto table = load_class_embeddings(dir + "/side.txt");
  REQUIRE(table.names == std::vector<std::string>{"cat", "dog"});
  // 3 text dims + 4 hierarchy nodes (entity, animal, cat, dog)
  CHECK(table.vectors.cols() == 7);

  // text-only and hierarchy-only modes
  REQUIRE(run_cli("build-sideinfo --classes " + dir + "/classes.txt" +
                  " --vectors " + dir + "/vec.txt --text glove --out " + dir +
                  "/side_text.txt") == 0);
  CHECK(load_class_embeddings(dir + "/side_text.txt").vectors.cols() == 3);
  REQUIRE(run_cli("build-sideinfo --classes " + dir + "/classes.txt" +
                  " --taxonomy " + dir + "/tax.txt --measure path --out " +
                  dir + "/side_hier.txt") == 0);
  CHECK(load_class_embeddings(dir + "/side_hier.txt").vectors.cols() == 4);

  // neither part enabled: config error
  CHECK(run_cli("build-sideinfo --classes " + dir + "/classes.txt") == 2);
}
