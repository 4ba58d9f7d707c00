// repdistill command-line front end.
//
// Exit codes: 0 success, 2 invalid input or arguments, 3 pipeline stage
// failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "repdistill/clustering.hpp"
#include "repdistill/corpus_metrics.hpp"
#include "repdistill/distill.hpp"
#include "repdistill/flowmap.hpp"
#include "repdistill/model_selection.hpp"
#include "repdistill/pipeline.hpp"
#include "repdistill/projection.hpp"
#include "repdistill/synthetic.hpp"
#include "repdistill/vectorstore.hpp"

namespace fs = std::filesystem;
using namespace repdistill;
using json = nlohmann::json;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitStage = 3;

VectorSet load(const fs::path& path) {
  return load_vector_set(path, format_from_extension(path));
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  std::cout << "wrote " << path.string() << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

std::string space_name(const VectorSet& s) { return std::string(to_string(s.space())); }

struct Args {
  std::string input, out, clusters, embedding, encoder, emb_clusters, enc_clusters;
  std::string config, corpus, pairs, dataset_tag, created_at, format = "binary";
  std::string metric = "cosine", centers = "medoid", space;
  std::size_t k = 0, k_min = 2, k_max = 20, k_neighbors = 10, budget = 0, top = 3;
  std::size_t per_blob = 30;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

void cmd_ingest(const Args& a) {
  const VectorSet s = load(a.input);
  const VectorFormat f = parse_format(a.format);
  const fs::path out = fs::path(a.out) / (space_name(s) + (f == VectorFormat::Jsonl ? ".jsonl" : ".bin"));
  fs::create_directories(a.out);
  save_vector_set(s, out, f);
  std::cout << fmt::format("{} records, dim {}, space {}, epoch {}\nwrote {}\n", s.size(), s.dim(),
                           space_name(s), s.epoch(), out.string());
}

void cmd_sweep(const Args& a) {
  const VectorSet s = load(a.input);
  const SweepResult r = sweep_k(s, a.k_min, a.k_max, parse_metric(a.metric), a.seeds);
  write_text(fs::path(a.out) / ("ksweep_" + space_name(s) + ".json"), to_json(r.report).dump(2) + "\n");
  write_text(fs::path(a.out) / ("ksweep_" + space_name(s) + ".csv"), to_csv(r.report));
  std::cout << fmt::format("elbow_k {}, db_k {}, selected_k {}{}\n", r.report.elbow_k,
                           r.report.db_k, r.report.selected_k,
                           r.report.agreement ? "" : " (criteria disagree)");
}

void cmd_cluster(const Args& a) {
  const VectorSet s = load(a.input);
  const Clustering c = kmeans(s, a.k, parse_metric(a.metric), a.seed);
  write_text(fs::path(a.out) / ("clusters_" + space_name(s) + ".json"), to_json(c).dump(2) + "\n");
  std::cout << fmt::format("k {}, wcss {}, {} iterations\n", c.k, c.wcss, c.iterations);
}

void cmd_project(const Args& a) {
  const VectorSet s = load(a.input);
  const Clustering c = clustering_from_json(read_json(a.clusters));
  const Projection2D p = pca_fit(s);
  write_text(fs::path(a.out) / ("scatter_" + space_name(s) + ".csv"), scatter_csv(p, c));
  write_text(fs::path(a.out) / ("projection_" + space_name(s) + ".json"), to_json(p).dump(2) + "\n");
  std::cout << fmt::format("explained variance {:.4f}, {:.4f}\n", p.explained_variance_ratio[0],
                           p.explained_variance_ratio[1]);
}

void print_top(const FlowMatrix& f, std::size_t m) {
  std::cout << fmt::format("{} -> {}\n", to_string(f.source_space), to_string(f.target_space));
  for (std::size_t row = 0; row < f.rows(); ++row) {
    std::cout << fmt::format("  #{}:", row);
    const auto top = top_targets(f, row, m);
    if (top.empty()) std::cout << " (empty)";
    for (const auto& [col, pct] : top) {
      if (f.counts[row][col] == 0) break;
      std::cout << fmt::format(" #{} {}%", col, format_percent(f.counts[row][col], f.row_total(row)));
    }
    std::cout << "\n";
  }
}

void cmd_flow(const Args& a) {
  const VectorSet emb = load(a.embedding), enc = load(a.encoder);
  const Alignment al = align_spaces(emb, enc);
  const Clustering ce = clustering_from_json(read_json(a.emb_clusters));
  const Clustering cn = clustering_from_json(read_json(a.enc_clusters));
  const FlowMatrix fwd = compute_flow(al.pairs, ce, cn, FlowDirection::EmbeddingToEncoder);
  const FlowMatrix rev = compute_flow(al.pairs, cn, ce, FlowDirection::EncoderToEmbedding);
  write_text(fs::path(a.out) / "flow_emb2enc.json", to_json(fwd).dump(2) + "\n");
  write_text(fs::path(a.out) / "flow_enc2emb.json", to_json(rev).dump(2) + "\n");
  print_top(fwd, a.top);
  print_top(rev, a.top);
}

void cmd_distill(const Args& a) {
  const VectorSet s = load(a.input);
  if (s.space() != parse_space(a.space)) {
    throw Error(ErrorCode::SpaceMismatch,
                fmt::format("--space {} but {} holds {} vectors", a.space, a.input, space_name(s)));
  }
  DistillOptions o;
  o.k_neighbors = a.k_neighbors;
  o.total = a.budget;
  o.seed = a.seed;
  o.centers = parse_center_mode(a.centers);
  o.dataset_tag = a.dataset_tag;
  o.created_at = a.created_at.empty() ? utc_timestamp_now() : a.created_at;
  const SelectionManifest m = distill(s, clustering_from_json(read_json(a.clusters)), o);
  write_text(fs::path(a.out) / "manifest_distill.json", to_json(m).dump(2) + "\n");
  std::cout << fmt::format("{} ids selected from {} centers{}\n", m.selected_ids.size(),
                           m.n_centers, m.budget.feasible ? "" : " (budget infeasible)");
}

void cmd_sample_random(const Args& a) {
  const VectorSet s = load(a.input);
  const SelectionManifest m = random_baseline_sample(
      s, a.budget, a.seed, a.dataset_tag, a.created_at.empty() ? utc_timestamp_now() : a.created_at);
  write_text(fs::path(a.out) / "manifest_random.json", to_json(m).dump(2) + "\n");
}

void cmd_metrics_stats(const Args& a) {
  const auto corpus = load_corpus(a.corpus);
  const CorpusStats st = corpus_stats(corpus);
  const std::string csv = stats_csv(st, a.dataset_tag.empty() ? "corpus" : a.dataset_tag);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_text(fs::path(a.out) / "corpus_stats.csv", csv);
  }
  for (const auto& f : st.failures) {
    std::cerr << fmt::format("warning: {} {}: {}\n", f.doc_id, f.metric, f.reason);
  }
}

void cmd_metrics_rouge(const Args& a) {
  const auto scores = score_pairs_file(a.pairs);
  const std::string csv = scores_csv(scores);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_text(fs::path(a.out) / "rouge_scores.csv", csv);
  }
}

void cmd_make_bundle(const Args& a) {
  const auto p = synthetic::write_bundle(a.out, a.per_blob, a.seed == 0 ? 7 : a.seed);
  std::cout << fmt::format("wrote {}\nwrote {}\nwrote {}\n", p.embedding.string(),
                           p.encoder.string(), p.corpus.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Representation-space analysis and budgeted training-set distillation"};
  app.require_subcommand(1);
  Args a;

  auto add_metric = [&](CLI::App* c) {
    c->add_option("--metric", a.metric, "cosine or euclidean")
        ->check(CLI::IsMember({"cosine", "euclidean"}))
        ->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest", "Validate a vector file and re-save it");
  ingest->add_option("input", a.input, "Vector file (.jsonl or binary)")->required();
  ingest->add_option("--to", a.format, "Output format: jsonl or binary")
      ->check(CLI::IsMember({"jsonl", "binary"}))->capture_default_str();
  ingest->add_option("--out", a.out, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Sweep k and pick it by elbow and Davies-Bouldin");
  sweep->add_option("--input", a.input)->required();
  sweep->add_option("--k-min", a.k_min)->capture_default_str();
  sweep->add_option("--k-max", a.k_max)->capture_default_str();
  sweep->add_option("--seeds", a.seeds)->delimiter(',');
  add_metric(sweep);
  sweep->add_option("--out", a.out)->required();

  auto* cluster = app.add_subcommand("cluster", "Run k-means for a fixed k");
  cluster->add_option("--input", a.input)->required();
  cluster->add_option("--k", a.k)->required();
  cluster->add_option("--seed", a.seed)->capture_default_str();
  add_metric(cluster);
  cluster->add_option("--out", a.out)->required();

  auto* project = app.add_subcommand("project", "2-D PCA scatter export");
  project->add_option("--input", a.input)->required();
  project->add_option("--clusters", a.clusters, "clusters_<space>.json")->required();
  project->add_option("--out", a.out)->required();

  auto* flow = app.add_subcommand("flow", "Cluster flow matrices between the two spaces");
  flow->add_option("--embedding", a.embedding)->required();
  flow->add_option("--encoder", a.encoder)->required();
  flow->add_option("--emb-clusters", a.emb_clusters)->required();
  flow->add_option("--enc-clusters", a.enc_clusters)->required();
  flow->add_option("--top", a.top, "Targets listed per row")->capture_default_str();
  flow->add_option("--out", a.out)->required();

  auto* dist = app.add_subcommand("distill", "Budgeted selection from cluster neighbourhoods");
  dist->add_option("--input", a.input)->required();
  dist->add_option("--clusters", a.clusters)->required();
  dist->add_option("--space", a.space, "Space the input vectors must belong to")
      ->check(CLI::IsMember({"embedding", "encoder"}))->required();
  dist->add_option("--budget", a.budget)->required();
  dist->add_option("--k-neighbors", a.k_neighbors)->capture_default_str();
  dist->add_option("--seed", a.seed)->capture_default_str();
  dist->add_option("--centers", a.centers)
      ->check(CLI::IsMember({"medoid", "all"}))->capture_default_str();
  dist->add_option("--dataset-tag", a.dataset_tag);
  dist->add_option("--created-at", a.created_at, "Timestamp stamped into the manifest");
  dist->add_option("--out", a.out)->required();

  auto* rnd = app.add_subcommand("sample-random", "Uniform random baseline selection");
  rnd->add_option("--input", a.input)->required();
  rnd->add_option("--budget", a.budget)->required();
  rnd->add_option("--seed", a.seed)->capture_default_str();
  rnd->add_option("--dataset-tag", a.dataset_tag);
  rnd->add_option("--created-at", a.created_at);
  rnd->add_option("--out", a.out)->required();

  auto* metrics = app.add_subcommand("metrics", "Corpus statistics and ROUGE scoring");
  metrics->require_subcommand(1);
  auto* stats = metrics->add_subcommand("stats", "Corpus statistics CSV");
  stats->add_option("corpus", a.corpus, "JSONL with id, sources, reference")->required();
  stats->add_option("--dataset-tag", a.dataset_tag);
  stats->add_option("--out", a.out, "Output directory (default: stdout)");
  auto* rouge = metrics->add_subcommand("rouge", "ROUGE-1/2/L for candidate/reference pairs");
  rouge->add_option("pairs", a.pairs, "JSONL with id, candidate, reference")->required();
  rouge->add_option("--out", a.out, "Output directory (default: stdout)");

  auto* run = app.add_subcommand("run", "Full pipeline");
  std::vector<std::pair<std::string, std::string>> overrides;
  run->add_option("--config", a.config, "key = value config file");
  for (const char* key : {"embedding", "encoder", "corpus", "out", "k_min", "k_max", "seeds",
                          "metric", "k_neighbors", "budget", "space", "centers", "dataset_tag",
                          "created_at"}) {
    std::string flag = std::string("--") + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    run->add_option_function<std::string>(
        flag, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); },
        fmt::format("Overrides '{}' from the config", key));
  }

  auto* bundle = app.add_subcommand("make-bundle", "Write a small synthetic input bundle");
  bundle->add_option("--per-blob", a.per_blob)->capture_default_str();
  bundle->add_option("--seed", a.seed);
  bundle->add_option("--out", a.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*ingest) cmd_ingest(a);
    else if (*sweep) cmd_sweep(a);
    else if (*cluster) cmd_cluster(a);
    else if (*project) cmd_project(a);
    else if (*flow) cmd_flow(a);
    else if (*dist) cmd_distill(a);
    else if (*rnd) cmd_sample_random(a);
    else if (*stats) cmd_metrics_stats(a);
    else if (*rouge) cmd_metrics_rouge(a);
    else if (*bundle) cmd_make_bundle(a);
    else if (*run) {
      RunConfig config;
      if (!a.config.empty()) {
        std::ifstream in(a.config);
        if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + a.config);
        std::stringstream ss;
        ss << in.rdbuf();
        config = parse_config(ss.str());
      }
      for (const auto& [key, value] : overrides) apply_config_entry(config, key, value);
      const RunRecord r = run_pipeline(config);
      std::cout << fmt::format("ok: {} artifacts under {}; selected k = {} (embedding), {} (encoder)\n",
                               r.artifacts.size(), config.out.string(), r.selected_k_embedding,
                               r.selected_k_encoder);
    }
  } catch (const StageFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return 0;
}
