#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "repdistill/clustering.hpp"
#include "repdistill/distill.hpp"
#include "repdistill/error.hpp"
#include "repdistill/vectorstore.hpp"

namespace repdistill {

// Declarative run description. Parsed from `key = value` lines; `#` starts a
// comment. Unknown keys are rejected.
struct RunConfig {
  std::filesystem::path embedding;
  std::filesystem::path encoder;
  std::filesystem::path corpus;  // optional
  std::filesystem::path out;
  std::size_t k_min = 2;
  std::size_t k_max = 20;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  Metric metric = Metric::Cosine;
  std::size_t k_neighbors = 10;
  std::size_t budget = 0;
  Space distill_space = Space::Encoder;
  CenterMode centers = CenterMode::Medoid;
  std::string dataset_tag;
  // Stamped into manifests so reruns stay byte-identical.
  std::string created_at = "1970-01-01T00:00:00Z";

  std::string source_text;  // the config file, verbatim
};

// Throws Error(InvalidArgument) on unknown keys or unparsable values.
void apply_config_entry(RunConfig& config, std::string_view key,
                        std::string_view value);
RunConfig parse_config(std::string_view text);
// Throws Error(InvalidArgument) naming the first violated constraint.
void validate(const RunConfig& config);
nlohmann::json effective_config(const RunConfig& config);

struct Artifact {
  std::string file;  // relative to the output directory
  std::string sha256;
  std::uint64_t bytes = 0;
};

struct RunRecord {
  bool ok = true;
  std::string failed_stage;
  std::string error;
  std::vector<std::string> stages_completed;
  std::vector<Artifact> artifacts;
  std::size_t selected_k_embedding = 0;
  std::size_t selected_k_encoder = 0;
};

nlohmann::json to_json(const RunRecord& record, const RunConfig& config);

// Raised by run_pipeline after the FAILED marker and the partial run record
// have been written.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(std::string stage, const std::string& what)
      : std::runtime_error("stage " + stage + " failed: " + what),
        stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Stages, in order: align, sweep, cluster, project, flow, distill, metrics.
// Every file is written under config.out and listed with its SHA-256 in
// run_record.json.
RunRecord run_pipeline(const RunConfig& config);

std::string sha256_hex(std::string_view bytes);

}  // namespace repdistill
