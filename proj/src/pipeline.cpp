#include "repdistill/pipeline.hpp"

#include <charconv>
#include <optional>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "fileio.hpp"
#include "repdistill/corpus_metrics.hpp"
#include "repdistill/flowmap.hpp"
#include "repdistill/model_selection.hpp"
#include "repdistill/projection.hpp"

namespace repdistill {

using json = nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto lo = s.find_first_not_of(" \t\r");
  if (lo == std::string_view::npos) return {};
  const auto hi = s.find_last_not_of(" \t\r");
  return s.substr(lo, hi - lo + 1);
}

template <typename T>
T parse_uint(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("{}: expected a non-negative integer, got '{}'", key,
                            value));
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(std::string_view value) {
  std::vector<std::uint64_t> seeds;
  while (!value.empty()) {
    const auto comma = value.find(',');
    const auto item = trim(value.substr(0, comma));
    if (!item.empty()) seeds.push_back(parse_uint<std::uint64_t>("seeds", item));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return seeds;
}

// Writes artifacts and keeps the record in creation order.
class OutputDir {
 public:
  OutputDir(std::filesystem::path root, RunRecord& record)
      : root_(std::move(root)), record_(record) {}

  void write(const std::string& name, const std::string& bytes) {
    detail::write_file(root_ / name, bytes);
    record_.artifacts.push_back({name, sha256_hex(bytes), bytes.size()});
  }
  void write_json(const std::string& name, const json& j) {
    write(name, j.dump(2) + "\n");
  }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  RunRecord& record_;
};

}  // namespace

void apply_config_entry(RunConfig& c, std::string_view key,
                        std::string_view value) {
  if (key == "embedding") c.embedding = std::string(value);
  else if (key == "encoder") c.encoder = std::string(value);
  else if (key == "corpus") c.corpus = std::string(value);
  else if (key == "out") c.out = std::string(value);
  else if (key == "k_min") c.k_min = parse_uint<std::size_t>(key, value);
  else if (key == "k_max") c.k_max = parse_uint<std::size_t>(key, value);
  else if (key == "seeds") c.seeds = parse_seeds(value);
  else if (key == "metric") c.metric = parse_metric(value);
  else if (key == "k_neighbors") c.k_neighbors = parse_uint<std::size_t>(key, value);
  else if (key == "budget") c.budget = parse_uint<std::size_t>(key, value);
  else if (key == "space") c.distill_space = parse_space(value);
  else if (key == "centers") c.centers = parse_center_mode(value);
  else if (key == "dataset_tag") c.dataset_tag = std::string(value);
  else if (key == "created_at") c.created_at = std::string(value);
  else {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("unknown config key '{}'", key));
  }
}

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  c.source_text = std::string(text);
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("config line {}: expected key = value", line_no));
    }
    apply_config_entry(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& why) {
    throw Error(ErrorCode::InvalidArgument, why);
  };
  if (c.embedding.empty()) fail("embedding path is required");
  if (c.encoder.empty()) fail("encoder path is required");
  if (c.out.empty()) fail("out directory is required");
  if (c.k_min < 2) fail("k_min must be >= 2");
  if (c.k_max < c.k_min + 2) fail("k_max must be >= k_min + 2 (elbow needs 3 candidates)");
  if (c.seeds.empty()) fail("seeds must be non-empty");
  if (c.budget < 1) fail("budget must be >= 1");
  if (c.k_neighbors < 1) fail("k_neighbors must be >= 1");
}

json effective_config(const RunConfig& c) {
  return json{{"embedding", c.embedding.string()},
              {"encoder", c.encoder.string()},
              {"corpus", c.corpus.string()},
              {"out", c.out.string()},
              {"k_min", c.k_min},
              {"k_max", c.k_max},
              {"seeds", c.seeds},
              {"metric", std::string(to_string(c.metric))},
              {"k_neighbors", c.k_neighbors},
              {"budget", c.budget},
              {"space", std::string(to_string(c.distill_space))},
              {"centers", std::string(to_string(c.centers))},
              {"dataset_tag", c.dataset_tag},
              {"created_at", c.created_at}};
}

json to_json(const RunRecord& r, const RunConfig& c) {
  json artifacts = json::array();
  for (const auto& a : r.artifacts) {
    artifacts.push_back({{"file", a.file}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  }
  json j = {{"status", r.ok ? "ok" : "failed"},
            {"stages_completed", r.stages_completed},
            {"artifacts", std::move(artifacts)},
            {"selected_k", {{"embedding", r.selected_k_embedding},
                            {"encoder", r.selected_k_encoder}}},
            {"config_text", c.source_text},
            {"effective_config", effective_config(c)}};
  if (!r.ok) {
    j["failed_stage"] = r.failed_stage;
    j["error"] = r.error;
  }
  return j;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::IoFailure, "SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

RunRecord run_pipeline(const RunConfig& config) {
  validate(config);
  std::error_code ec;
  std::filesystem::create_directories(config.out, ec);
  if (ec) {
    throw Error(ErrorCode::IoFailure,
                "cannot create " + config.out.string() + ": " + ec.message());
  }

  std::filesystem::remove(config.out / "FAILED", ec);

  RunRecord record;
  OutputDir out(config.out, record);
  std::string stage;

  auto finish = [&]() {
    detail::write_file(config.out / "run_record.json",
                       to_json(record, config).dump(2) + "\n");
  };

  VectorSet sets[2];
  Alignment alignment;
  SweepResult sweeps[2];
  Clustering clusters[2];

  try {
    stage = "align";
    sets[0] = load_vector_set(config.embedding, format_from_extension(config.embedding));
    sets[1] = load_vector_set(config.encoder, format_from_extension(config.encoder));
    alignment = align_spaces(sets[0], sets[1]);
    out.write_json("alignment.json",
                   {{"paired", alignment.pairs.size()},
                    {"only_embedding", alignment.only_embedding},
                    {"only_encoder", alignment.only_encoder}});
    record.stages_completed.push_back(stage);

    stage = "sweep";
    for (int s = 0; s < 2; ++s) {
      sweeps[s] = sweep_k(sets[s], config.k_min, config.k_max, config.metric,
                          config.seeds);
      const std::string space(to_string(sets[s].space()));
      out.write_json("ksweep_" + space + ".json", to_json(sweeps[s].report));
      out.write("ksweep_" + space + ".csv", to_csv(sweeps[s].report));
    }
    record.selected_k_embedding = sweeps[0].report.selected_k;
    record.selected_k_encoder = sweeps[1].report.selected_k;
    record.stages_completed.push_back(stage);

    stage = "cluster";
    for (int s = 0; s < 2; ++s) {
      const auto& rep = sweeps[s].report;
      for (std::size_t i = 0; i < rep.k_values.size(); ++i) {
        if (rep.k_values[i] == rep.selected_k) clusters[s] = sweeps[s].best[i];
      }
      out.write_json("clusters_" + std::string(to_string(sets[s].space())) + ".json",
                     to_json(clusters[s]));
    }
    record.stages_completed.push_back(stage);

    stage = "project";
    for (int s = 0; s < 2; ++s) {
      const Projection2D proj = pca_fit(sets[s]);
      const std::string space(to_string(sets[s].space()));
      out.write("scatter_" + space + ".csv", scatter_csv(proj, clusters[s]));
      out.write_json("projection_" + space + ".json", to_json(proj));
    }
    record.stages_completed.push_back(stage);

    stage = "flow";
    const FlowMatrix fwd = compute_flow(alignment.pairs, clusters[0], clusters[1],
                                        FlowDirection::EmbeddingToEncoder);
    const FlowMatrix rev = compute_flow(alignment.pairs, clusters[1], clusters[0],
                                        FlowDirection::EncoderToEmbedding);
    out.write_json("flow_emb2enc.json", to_json(fwd));
    out.write_json("flow_enc2emb.json", to_json(rev));
    record.stages_completed.push_back(stage);

    stage = "distill";
    const int ds = config.distill_space == Space::Embedding ? 0 : 1;
    DistillOptions opts;
    opts.k_neighbors = config.k_neighbors;
    opts.total = config.budget;
    opts.seed = config.seeds.front();
    opts.centers = config.centers;
    opts.dataset_tag = config.dataset_tag;
    opts.created_at = config.created_at;
    out.write_json("manifest_distill.json",
                   to_json(distill(sets[ds], clusters[ds], opts)));
    out.write_json("manifest_random.json",
                   to_json(random_baseline_sample(
                       sets[ds], std::min(config.budget, sets[ds].size()),
                       opts.seed, config.dataset_tag, config.created_at)));
    record.stages_completed.push_back(stage);

    if (!config.corpus.empty()) {
      stage = "metrics";
      const auto corpus = load_corpus(config.corpus);
      const CorpusStats st = corpus_stats(corpus);
      out.write("corpus_stats.csv",
                stats_csv(st, config.dataset_tag.empty() ? "corpus"
                                                         : config.dataset_tag));
      record.stages_completed.push_back(stage);
    }
  } catch (const std::exception& e) {
    record.ok = false;
    record.failed_stage = stage;
    record.error = e.what();
    try {
      out.write("FAILED", fmt::format("stage: {}\nerror: {}\n", stage, e.what()));
      finish();
    } catch (const std::exception&) {
      // The original failure is the one worth reporting.
    }
    throw StageFailure(stage, e.what());
  }
  finish();
  return record;
}

}  // namespace repdistill
