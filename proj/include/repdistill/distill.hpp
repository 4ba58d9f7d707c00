#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "repdistill/clustering.hpp"
#include "repdistill/vectorstore.hpp"

namespace repdistill {

// Similarity-ranked cosine neighbourhood of a center. Rank 0 is the most
// similar member; the center itself is not a member.
struct SubCluster {
  std::string center_id;
  std::vector<std::string> member_ids;
  std::vector<double> similarities;  // descending

  // Members plus the center.
  std::size_t capacity() const { return member_ids.size() + 1; }
};

struct Budget {
  std::size_t total = 0;  // requested
  std::map<std::string, std::size_t> per_center_quota;
  std::uint64_t seed = 0;
  bool feasible = true;  // false when total exceeded what could be selected
};

enum class CenterMode { Medoid, All };

std::string_view to_string(CenterMode mode);
CenterMode parse_center_mode(std::string_view text);

struct SelectionManifest {
  std::string method;  // "distill" or "random"
  std::string dataset_tag;
  Space space = Space::Embedding;
  std::size_t k_neighbors = 0;
  std::size_t n_centers = 0;
  std::vector<std::string> centers;
  Budget budget;
  std::vector<std::string> selected_ids;  // sorted, unique
  std::size_t refilled = 0;  // ids added to cover overlap shortfall
  nlohmann::json parameters = nlohmann::json::object();
  std::string created_at;
};

// One center per top-level cluster: the member with the highest cosine
// similarity to the cluster centroid, ties by id byte order. Returned in
// cluster index order.
std::vector<std::string> choose_centers(const VectorSet& set,
                                        const Clustering& clustering);

SubCluster build_subcluster(std::string_view center, const VectorSet& set,
                            std::size_t k);

// Center first, then q = quota - 1 members at ranks floor(t * L / q).
std::vector<std::string> uniform_stride_sample(const SubCluster& sub,
                                               std::size_t quota);

// Member ranks picked by uniform_stride_sample for L ranked members and q
// member slots. Exposed for property checks.
std::vector<std::size_t> stride_ranks(std::size_t members, std::size_t slots);

// Equal split with the remainder going one-each to the largest sub-clusters
// (ties by center id); quotas are clipped to capacity and the overflow is
// re-split by the same rule.
Budget allocate_budget(std::span<const SubCluster> subclusters,
                       std::size_t total);

struct DistillOptions {
  std::size_t k_neighbors = 10;
  std::size_t total = 0;
  std::uint64_t seed = 0;
  CenterMode centers = CenterMode::Medoid;
  std::string dataset_tag;
  std::string created_at;
};

SelectionManifest distill(const VectorSet& set, const Clustering& clustering,
                          const DistillOptions& options);

SelectionManifest random_baseline_sample(const VectorSet& set,
                                         std::size_t total, std::uint64_t seed,
                                         std::string dataset_tag = {},
                                         std::string created_at = {});

nlohmann::json to_json(const SelectionManifest& manifest);

// UTC ISO-8601 timestamp of the current time, second resolution.
std::string utc_timestamp_now();

}  // namespace repdistill
