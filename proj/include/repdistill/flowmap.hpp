#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "repdistill/clustering.hpp"
#include "repdistill/vectorstore.hpp"

namespace repdistill {

enum class FlowDirection { EmbeddingToEncoder, EncoderToEmbedding };

std::string_view to_string(FlowDirection direction);  // "emb2enc" / "enc2emb"
FlowDirection parse_direction(std::string_view text);

// Contingency table of cluster labels for the same samples in two spaces.
// Rows are source clusters, columns target clusters.
struct FlowMatrix {
  FlowDirection direction = FlowDirection::EmbeddingToEncoder;
  Space source_space = Space::Embedding;
  Space target_space = Space::Encoder;
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<std::vector<double>> row_pct;  // percent, derived from counts
  std::vector<bool> empty_rows;
  std::uint64_t n = 0;

  std::size_t rows() const { return counts.size(); }
  std::size_t cols() const { return counts.empty() ? 0 : counts.front().size(); }
  std::uint64_t row_total(std::size_t row) const;
};

// counts[i][j] = #{id : src(id) = i and tgt(id) = j}. The direction only
// labels which representation space each axis belongs to.
FlowMatrix compute_flow(std::span<const AlignedPair> pairs, const Clustering& src,
                        const Clustering& tgt, FlowDirection direction);

// Same, over a plain id list.
FlowMatrix compute_flow(std::span<const std::string> ids, const Clustering& src,
                        const Clustering& tgt, FlowDirection direction);

// The m largest entries of a row as (column, percent), descending, ties by
// smaller column. Empty rows give an empty list.
std::vector<std::pair<std::size_t, double>> top_targets(const FlowMatrix& flow,
                                                        std::size_t row,
                                                        std::size_t m);

// Percent of all samples landing in the m most populated target columns.
double saturation_index(const FlowMatrix& flow, std::size_t m);

// Two-decimal percent computed from the integer counts, rounding half up.
std::string format_percent(std::uint64_t count, std::uint64_t total);

nlohmann::json to_json(const FlowMatrix& flow);
// Rows "source,target,count,percent" for every non-zero cell.
std::string to_csv(const FlowMatrix& flow);

}  // namespace repdistill
