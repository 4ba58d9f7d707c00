#include "repdistill/flowmap.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "repdistill/error.hpp"

namespace repdistill {

using json = nlohmann::json;

std::string_view to_string(FlowDirection direction) {
  return direction == FlowDirection::EmbeddingToEncoder ? "emb2enc" : "enc2emb";
}

FlowDirection parse_direction(std::string_view text) {
  if (text == "emb2enc") return FlowDirection::EmbeddingToEncoder;
  if (text == "enc2emb") return FlowDirection::EncoderToEmbedding;
  throw Error(ErrorCode::InvalidArgument,
              "unknown direction '" + std::string(text) + "'");
}

std::uint64_t FlowMatrix::row_total(std::size_t row) const {
  return std::accumulate(counts[row].begin(), counts[row].end(),
                         std::uint64_t{0});
}

FlowMatrix compute_flow(std::span<const std::string> ids, const Clustering& src,
                        const Clustering& tgt, FlowDirection direction) {
  if (ids.empty()) {
    throw Error(ErrorCode::EmptyPairs, "no paired samples");
  }
  FlowMatrix flow;
  flow.direction = direction;
  const bool forward = direction == FlowDirection::EmbeddingToEncoder;
  flow.source_space = forward ? Space::Embedding : Space::Encoder;
  flow.target_space = forward ? Space::Encoder : Space::Embedding;
  flow.counts.assign(src.k, std::vector<std::uint64_t>(tgt.k, 0));
  for (const auto& id : ids) {
    const std::size_t i = src.cluster_of(id);
    const std::size_t j = tgt.cluster_of(id);
    ++flow.counts[i][j];
  }
  flow.n = ids.size();

  flow.row_pct.assign(src.k, std::vector<double>(tgt.k, 0.0));
  flow.empty_rows.assign(src.k, false);
  for (std::size_t i = 0; i < src.k; ++i) {
    const std::uint64_t total = flow.row_total(i);
    if (total == 0) {
      flow.empty_rows[i] = true;
      continue;
    }
    for (std::size_t j = 0; j < tgt.k; ++j) {
      flow.row_pct[i][j] = 100.0 * static_cast<double>(flow.counts[i][j]) /
                           static_cast<double>(total);
    }
  }
  return flow;
}

FlowMatrix compute_flow(std::span<const AlignedPair> pairs, const Clustering& src,
                        const Clustering& tgt, FlowDirection direction) {
  std::vector<std::string> ids;
  ids.reserve(pairs.size());
  for (const auto& p : pairs) ids.push_back(p.id);
  return compute_flow(std::span<const std::string>(ids), src, tgt, direction);
}

std::vector<std::pair<std::size_t, double>> top_targets(const FlowMatrix& flow,
                                                        std::size_t row,
                                                        std::size_t m) {
  if (row >= flow.rows()) {
    throw Error(ErrorCode::RowOutOfRange,
                fmt::format("row {} of {}", row, flow.rows()));
  }
  if (m == 0) {
    throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
  }
  std::vector<std::pair<std::size_t, double>> out;
  if (flow.empty_rows[row]) return out;
  // Order on exact counts so equal percentages tie on column index.
  std::vector<std::size_t> cols(flow.cols());
  std::iota(cols.begin(), cols.end(), 0);
  const auto& counts = flow.counts[row];
  std::stable_sort(cols.begin(), cols.end(), [&](std::size_t a, std::size_t b) {
    return counts[a] > counts[b];
  });
  cols.resize(std::min(m, cols.size()));
  for (auto j : cols) out.emplace_back(j, flow.row_pct[row][j]);
  return out;
}

double saturation_index(const FlowMatrix& flow, std::size_t m) {
  if (m == 0) {
    throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
  }
  if (flow.n == 0) {
    throw Error(ErrorCode::EmptyPairs, "empty flow");
  }
  std::vector<std::uint64_t> column(flow.cols(), 0);
  for (const auto& row : flow.counts) {
    for (std::size_t j = 0; j < row.size(); ++j) column[j] += row[j];
  }
  std::sort(column.begin(), column.end(), std::greater<>());
  column.resize(std::min(m, column.size()));
  const auto top = std::accumulate(column.begin(), column.end(), std::uint64_t{0});
  return 100.0 * static_cast<double>(top) / static_cast<double>(flow.n);
}

std::string format_percent(std::uint64_t count, std::uint64_t total) {
  if (total == 0) return "0.00";
  // Hundredths of a percent, rounded half up, in integer arithmetic.
  const unsigned __int128 scaled =
      (static_cast<unsigned __int128>(count) * 20000 + total) / (2 * total);
  const auto v = static_cast<std::uint64_t>(scaled);
  return fmt::format("{}.{:02}", v / 100, v % 100);
}

json to_json(const FlowMatrix& flow) {
  return json{{"direction", std::string(to_string(flow.direction))},
              {"source_space", std::string(to_string(flow.source_space))},
              {"target_space", std::string(to_string(flow.target_space))},
              {"counts", flow.counts},
              {"row_pct", flow.row_pct},
              {"empty_rows", flow.empty_rows},
              {"n", flow.n}};
}

std::string to_csv(const FlowMatrix& flow) {
  std::string out = "source,target,count,percent\n";
  for (std::size_t i = 0; i < flow.rows(); ++i) {
    const auto total = flow.row_total(i);
    for (std::size_t j = 0; j < flow.cols(); ++j) {
      if (flow.counts[i][j] == 0) continue;
      out += fmt::format("{},{},{},{}\n", i, j, flow.counts[i][j],
                         format_percent(flow.counts[i][j], total));
    }
  }
  return out;
}

}  // namespace repdistill
