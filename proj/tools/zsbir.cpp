// Command-line front end. Every subcommand reads an optional flat config
// file, applies --set key=value overrides on top, and stamps its outputs
// with the hash of the effective configuration.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
// failure.

#include "zsbir/experiment.hpp"
#include "zsbir/side_info.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace zsbir;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key=value config file");
    cmd->add_option("--set", overrides,
                    "override a config key, e.g. --set train.epochs=40");
  }

  Config load() const {
    Config cfg = config_path.empty() ? Config{} : Config::from_file(config_path);
    for (const auto& o : overrides) cfg.apply_override(o);
    return cfg;
  }
};

std::vector<std::string> read_class_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open class list: " + path);
  std::vector<std::string> classes;
  std::string line;
  while (std::getline(in, line)) {
    std::string s = trim(line);
    if (!s.empty() && s[0] != '#') classes.push_back(s);
  }
  if (classes.empty()) throw DataError("class list is empty: " + path);
  return classes;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << text;
}

int cmd_build_sideinfo(const Config& cfg) {
  const std::string out_path = cfg.str("sideinfo.out", "sideinfo.txt");
  const std::string text_source = cfg.str("sideinfo.text", "none");
  const std::string measure_name = cfg.str("sideinfo.measure", "none");
  if (text_source == "none" && measure_name == "none")
    throw ConfigError("enable sideinfo.text (glove|word2vec) and/or "
                      "sideinfo.measure (path|lin|jcn)");

  auto classes = read_class_list(cfg.require("sideinfo.classes"));

  WordVectorTable words;
  Taxonomy tax;
  SideInfoSpec spec;
  if (text_source != "none") {
    if (text_source != "glove" && text_source != "word2vec")
      throw ConfigError("sideinfo.text must be glove|word2vec|none");
    words = load_word_vectors(cfg.require("sideinfo.vectors"));
    spec.words = &words;
  }
  if (measure_name != "none") {
    tax = load_taxonomy(cfg.require("sideinfo.taxonomy"));
    spec.taxonomy = &tax;
    spec.measure = parse_measure(measure_name);
    const std::string ic = cfg.str("sideinfo.ic", "intrinsic");
    if (ic == "file")
      spec.ic = corpus_ic(tax, cfg.require("sideinfo.ic_file"));
    else if (ic != "intrinsic")
      throw ConfigError("sideinfo.ic must be intrinsic|file");
  }
  if (cfg.has("sideinfo.aliases"))
    spec.aliases = load_aliases(cfg.str("sideinfo.aliases", ""));

  auto embeddings = build_side_info(classes, spec);
  Mat table(embeddings.size(), embeddings[0].combined.size());
  std::vector<std::string> names;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    table.row(static_cast<Eigen::Index>(i)) = embeddings[i].combined;
    names.push_back(embeddings[i].class_id);
  }
  save_class_embeddings(out_path, names, table, cfg.hash_hex());
  std::cout << "wrote " << names.size() << " class embeddings of dim "
            << table.cols() << " to " << out_path << "\n";
  return 0;
}

SynthConfig synth_config_from(const Config& cfg) {
  SynthConfig s;
  s.n_seen = static_cast<int>(cfg.integer("synth.n_seen", s.n_seen));
  s.n_unseen = static_cast<int>(cfg.integer("synth.n_unseen", s.n_unseen));
  s.samples_per_class = static_cast<int>(
      cfg.integer("synth.samples_per_class", s.samples_per_class));
  s.feature_dim =
      static_cast<int>(cfg.integer("synth.feature_dim", s.feature_dim));
  s.side_dim = static_cast<int>(cfg.integer("synth.side_dim", s.side_dim));
  s.latent_dim =
      static_cast<int>(cfg.integer("synth.latent_dim", s.latent_dim));
  s.cluster_spread = cfg.num("synth.cluster_spread", s.cluster_spread);
  s.modality_distortion =
      cfg.num("synth.modality_distortion", s.modality_distortion);
  s.seed = cfg.seed("synth.seed", s.seed);
  return s;
}

int cmd_synth_data(const Config& cfg) {
  SynthConfig sc = synth_config_from(cfg);
  const std::string dir = cfg.str("data.dir", "data");
  Dataset ds = synthesize_dataset(sc);
  save_dataset(dir, ds, cfg.hash_hex());
  std::cout << "synthesized " << ds.n_classes() << " classes ("
            << ds.n_seen() << " seen) into " << dir
            << "; nearest-prototype accuracy "
            << fmt_double(ds.prototype_accuracy) << "\n";
  return 0;
}

Dataset load_data_dir(const Config& cfg) {
  const std::string dir = cfg.str("data.dir", "data");
  if (!std::filesystem::exists(dir + "/sideinfo.txt"))
    throw DataError("no dataset under '" + dir +
                    "'; run `zsbir synth-data` first or point data.dir at a "
                    "directory with sketch.feat/image.feat/sideinfo.txt/"
                    "split.txt");
  int expected = static_cast<int>(cfg.integer("data.feature_dim", 0));
  return load_dataset(dir, expected);
}

int cmd_train(const Config& cfg) {
  Dataset ds = load_data_dir(cfg);
  TrainConfig tc = train_config_from_config(cfg);
  const std::string ckpt_path = cfg.str("train.checkpoint", "model.ckpt");
  const std::string log_path = cfg.str("train.log", "train_log.csv");

  TrainLog log;
  log.console = &std::cout;
  Checkpoint ckpt = fit(ds, tc, &log);
  save_checkpoint(ckpt, ckpt_path, cfg.hash_hex());
  std::string csv;
  for (const auto& row : log.csv_rows) csv += row + "\n";
  csv += "# config " + cfg.hash_hex() + "\n";
  write_text(log_path, csv);
  std::cout << "checkpoint -> " << ckpt_path << ", log -> " << log_path
            << "\n";
  return 0;
}

int cmd_embed(const Config& cfg) {
  Checkpoint ckpt = load_checkpoint(cfg.require("embed.checkpoint"));
  const std::string modality = cfg.str("embed.modality", "sketch");
  if (modality != "sketch" && modality != "image")
    throw ConfigError("embed.modality must be sketch|image");
  FeatureSet fs = load_features(cfg.require("embed.features"),
                                ckpt.state.dims.feature_dim);
  Mat emb = embed_rows(ckpt.state, fs.x,
                       modality == "sketch" ? Modality::Sketch
                                            : Modality::Image);
  FeatureSet out{std::move(emb), fs.labels};
  const std::string out_path = cfg.str("embed.out", modality + ".emb");
  save_features(out_path, out, cfg.hash_hex());
  std::cout << "embedded " << out.x.rows() << " " << modality
            << " samples to dim " << out.x.cols() << " -> " << out_path
            << "\n";
  return 0;
}

int cmd_fit_itq(const Config& cfg, const std::vector<std::string>& emb_paths,
                bool emit_codes) {
  if (emb_paths.empty())
    throw ConfigError("fit-itq needs at least one --embeddings file");
  std::vector<FeatureSet> sets;
  long rows = 0;
  for (const auto& p : emb_paths) {
    sets.push_back(load_features(p));
    rows += sets.back().x.rows();
    if (sets.back().x.cols() != sets.front().x.cols())
      throw DataError("embedding files disagree on dimension");
  }
  Mat pooled(rows, sets.front().x.cols());
  long at = 0;
  for (const auto& s : sets) {
    pooled.middleRows(at, s.x.rows()) = s.x;
    at += s.x.rows();
  }
  const int iters = static_cast<int>(cfg.integer("itq.iters", 50));
  const std::uint64_t seed = cfg.seed("itq.seed", 1);
  ItqFitInfo info;
  ItqModel model = fit_itq(pooled, iters, seed, &info, &std::cerr);
  const std::string out_path = cfg.str("itq.out", "itq.txt");
  save_itq(model, out_path, cfg.hash_hex());
  std::cout << "itq model (" << model.bits << " bits, " << iters
            << " iters) -> " << out_path << "\n";
  if (emit_codes) {
    for (std::size_t i = 0; i < sets.size(); ++i) {
      auto codes = binarize_rows(model, sets[i].x);
      save_codes(emb_paths[i] + ".codes", sets[i].labels, codes,
                 cfg.hash_hex());
      std::cout << "codes -> " << emb_paths[i] << ".codes\n";
    }
  }
  return 0;
}

struct RankedInputs {
  FeatureSet queries, gallery;
  Metric metric = Metric::Euclidean;
  ItqModel itq;
  bool has_itq = false;
};

RankedInputs load_ranked_inputs(const Config& cfg) {
  RankedInputs in;
  in.metric = parse_metric(cfg.str("eval.metric", "euclidean"));
  in.queries = load_features(cfg.require("eval.queries"));
  in.gallery = load_features(cfg.require("eval.gallery"));
  if (cfg.has("eval.gallery_extra")) {
    FeatureSet extra = load_features(cfg.str("eval.gallery_extra", ""));
    if (extra.x.cols() != in.gallery.x.cols())
      throw DataError("gallery_extra dimension mismatch");
    Mat merged(in.gallery.x.rows() + extra.x.rows(), in.gallery.x.cols());
    merged.topRows(in.gallery.x.rows()) = in.gallery.x;
    merged.bottomRows(extra.x.rows()) = extra.x;
    in.gallery.x = std::move(merged);
    in.gallery.labels.insert(in.gallery.labels.end(), extra.labels.begin(),
                             extra.labels.end());
  }
  if (in.metric == Metric::Hamming) {
    in.itq = load_itq(cfg.require("eval.itq"));
    in.has_itq = true;
  }
  return in;
}

int cmd_retrieve(const Config& cfg) {
  RankedInputs in = load_ranked_inputs(cfg);
  RetrievalResult res = evaluate_embeddings(
      in.queries.x, in.queries.labels, in.gallery.x, in.gallery.labels,
      in.metric, in.has_itq ? &in.itq : nullptr);
  const int topk = static_cast<int>(cfg.integer("retrieve.topk", 10));
  const std::string out_path = cfg.str("retrieve.out", "topk.csv");
  save_topk_csv(out_path, res, in.queries.labels, in.gallery.labels, topk,
                cfg.hash_hex());
  std::cout << "top-" << topk << " dump for " << res.ranked.size()
            << " queries -> " << out_path << "\n";
  return 0;
}

int cmd_eval(const Config& cfg) {
  RankedInputs in = load_ranked_inputs(cfg);
  EvalMode mode = parse_eval_mode(cfg.str("eval.mode", "zeroshot"));
  RetrievalResult res = evaluate_embeddings(
      in.queries.x, in.queries.labels, in.gallery.x, in.gallery.labels,
      in.metric, in.has_itq ? &in.itq : nullptr);
  const std::string out_path = cfg.str("eval.out", "metrics.json");
  nlohmann::json j = metrics_json(res, mode, in.metric,
                                  static_cast<int>(in.queries.x.cols()),
                                  cfg.hash_hex());
  write_text(out_path, j.dump(2) + "\n");
  const std::string pr_path = cfg.str("eval.pr", "pr.csv");
  save_pr_csv(pr_path, res.pr, cfg.hash_hex());
  std::cout << "mAP@all " << fmt_double(res.map_all) << ", P@100 "
            << fmt_double(res.precision_at_100) << " -> " << out_path
            << ", PR -> " << pr_path << "\n";
  if (res.zero_relevant_queries > 0)
    std::cerr << "warning: " << res.zero_relevant_queries
              << " queries had no relevant gallery item (AP counted as 0)\n";
  return 0;
}

int cmd_ablate(const Config& cfg) {
  Dataset ds = load_data_dir(cfg);
  TrainConfig tc = train_config_from_config(cfg);
  auto rows = run_ablation_suite(ds, tc);
  std::string table = "configuration\tmAP@all\n";
  for (const auto& r : rows)
    table += (r.name == "none" ? std::string("full") : r.name) + "\t" +
             fmt_double(r.map_unseen) + "\n";
  const std::string out_path = cfg.str("ablate.out", "ablate.tsv");
  write_text(out_path, table + "# config " + cfg.hash_hex() + "\n");
  std::cout << table << "-> " << out_path << "\n";
  return 0;
}

int cmd_sweep_sideinfo(const Config& cfg) {
  Dataset ds = load_data_dir(cfg);
  TrainConfig tc = train_config_from_config(cfg);
  std::vector<double> ratios;
  for (const auto& tok :
       split(cfg.str("sweep.ratios", "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4"),
             ',')) {
    double r;
    if (!parse_double(trim(tok), r))
      throw ConfigError("sweep.ratios: bad entry '" + tok + "'");
    ratios.push_back(r);
  }
  auto rows = run_selection_sweep(ds, tc, ratios);
  std::string csv = "ratio,retained,mAP_all\n";
  for (const auto& r : rows)
    csv += fmt_double(r.ratio) + "," + std::to_string(r.retained) + "," +
           fmt_double(r.map_unseen) + "\n";
  const std::string out_path = cfg.str("sweep.out", "sweep_sideinfo.csv");
  write_text(out_path, csv + "# config " + cfg.hash_hex() + "\n");
  std::cout << csv << "-> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-shot sketch-based image retrieval toolkit"};
  app.require_subcommand(1);

  CommonArgs common;

  auto* c_side = app.add_subcommand("build-sideinfo",
                                    "build class side-information vectors");
  auto* c_synth = app.add_subcommand("synth-data",
                                     "generate a synthetic dataset");
  auto* c_train = app.add_subcommand("train", "train a model");
  auto* c_embed = app.add_subcommand("embed",
                                     "map features to the semantic space");
  auto* c_itq = app.add_subcommand("fit-itq", "fit an ITQ binarizer");
  auto* c_retr = app.add_subcommand("retrieve", "dump top-K retrievals");
  auto* c_eval = app.add_subcommand("eval", "compute retrieval metrics");
  auto* c_abl = app.add_subcommand("ablate", "run the ablation table");
  auto* c_sweep = app.add_subcommand("sweep-sideinfo",
                                     "side-information removal sweep");

  for (CLI::App* c : {c_side, c_synth, c_train, c_embed, c_itq, c_retr,
                      c_eval, c_abl, c_sweep})
    common.attach(c);

  // frequently-used dedicated flags, equivalent to --set of the same key
  std::map<CLI::App*, std::vector<std::pair<std::string, std::string>>> flagged;
  auto flag = [&](CLI::App* c, const std::string& opt, const std::string& key,
                  const std::string& help) {
    auto* o = c->add_option(opt, help);
    o->each([c, key, &flagged](const std::string& v) {
      flagged[c].emplace_back(key, v);
    });
  };
  flag(c_side, "--out", "sideinfo.out", "output embedding table");
  flag(c_side, "--classes", "sideinfo.classes", "class list file");
  flag(c_side, "--taxonomy", "sideinfo.taxonomy", "edge-list file");
  flag(c_side, "--vectors", "sideinfo.vectors", "word-vector file");
  flag(c_side, "--aliases", "sideinfo.aliases", "alias file");
  flag(c_side, "--text", "sideinfo.text", "glove|word2vec|none");
  flag(c_side, "--measure", "sideinfo.measure", "path|lin|jcn|none");
  flag(c_synth, "--out", "data.dir", "dataset directory");
  flag(c_train, "--data", "data.dir", "dataset directory");
  flag(c_train, "--out", "train.checkpoint", "checkpoint path");
  flag(c_train, "--log", "train.log", "training log CSV");
  flag(c_train, "--seed", "train.seed", "training seed");
  flag(c_embed, "--checkpoint", "embed.checkpoint", "checkpoint path");
  flag(c_embed, "--features", "embed.features", "feature file");
  flag(c_embed, "--modality", "embed.modality", "sketch|image");
  flag(c_embed, "--out", "embed.out", "output embedding file");
  flag(c_itq, "--out", "itq.out", "ITQ model path");
  flag(c_itq, "--iters", "itq.iters", "alternation count");
  flag(c_retr, "--queries", "eval.queries", "query embedding file");
  flag(c_retr, "--gallery", "eval.gallery", "gallery embedding file");
  flag(c_retr, "--metric", "eval.metric", "euclidean|hamming");
  flag(c_retr, "--itq", "eval.itq", "ITQ model for hamming");
  flag(c_retr, "--topk", "retrieve.topk", "rows per query");
  flag(c_retr, "--out", "retrieve.out", "output CSV");
  flag(c_eval, "--queries", "eval.queries", "query embedding file");
  flag(c_eval, "--gallery", "eval.gallery", "gallery embedding file");
  flag(c_eval, "--gallery-extra", "eval.gallery_extra",
       "extra gallery file (generalized distractors)");
  flag(c_eval, "--metric", "eval.metric", "euclidean|hamming");
  flag(c_eval, "--itq", "eval.itq", "ITQ model for hamming");
  flag(c_eval, "--mode", "eval.mode", "zeroshot|generalized");
  flag(c_eval, "--out", "eval.out", "metrics JSON");
  flag(c_eval, "--pr", "eval.pr", "PR curve CSV");
  flag(c_abl, "--data", "data.dir", "dataset directory");
  flag(c_abl, "--out", "ablate.out", "output TSV");
  flag(c_sweep, "--data", "data.dir", "dataset directory");
  flag(c_sweep, "--out", "sweep.out", "output CSV");

  std::vector<std::string> itq_embeddings;
  bool itq_codes = false;
  c_itq->add_option("--embeddings", itq_embeddings,
                    "embedding files pooled for the rotation");
  c_itq->add_flag("--codes", itq_codes, "also write <file>.codes per input");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    Config cfg = common.load();
    for (const auto& [key, value] : flagged[sub]) cfg.set(key, value);

    if (sub == c_side) return cmd_build_sideinfo(cfg);
    if (sub == c_synth) return cmd_synth_data(cfg);
    if (sub == c_train) return cmd_train(cfg);
    if (sub == c_embed) return cmd_embed(cfg);
    if (sub == c_itq) return cmd_fit_itq(cfg, itq_embeddings, itq_codes);
    if (sub == c_retr) return cmd_retrieve(cfg);
    if (sub == c_eval) return cmd_eval(cfg);
    if (sub == c_abl) return cmd_ablate(cfg);
    if (sub == c_sweep) return cmd_sweep_sideinfo(cfg);
    throw ConfigError("unknown subcommand");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
