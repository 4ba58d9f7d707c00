#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "repdistill/vectorstore.hpp"

namespace repdistill {

enum class Metric { Cosine, Euclidean };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

// dot(a,b) / (|a| |b|), clamped to [-1, 1].
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct NeighborList {
  std::string center_id;
  std::vector<std::string> neighbor_ids;
  std::vector<double> similarities;  // descending
};

// Exact cosine k-nearest neighbours of `center`, excluding the center itself.
// Ties are broken by id byte order.
NeighborList knn_neighbors(std::string_view center, const VectorSet& set,
                           std::size_t k);

// Full similarity ranking of every other record against `center`, in the
// same order knn_neighbors uses. knn_neighbors is a prefix of this.
NeighborList rank_by_similarity(std::string_view center, const VectorSet& set);

struct Clustering {
  std::size_t k = 0;
  Metric metric = Metric::Cosine;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double wcss = 0.0;
  std::vector<std::vector<double>> centroids;
  std::map<std::string, std::size_t> assignments;

  // Throws MissingAssignment when id is not covered.
  std::size_t cluster_of(std::string_view id) const;
};

struct KMeansOptions {
  std::size_t max_iterations = 300;
  double relative_tolerance = 1e-6;
};

// Lloyd iterations from k-means++ seeding, then single-point moves until no
// move lowers the WCSS. With Metric::Cosine the data is
// L2-normalized first (spherical k-means) and all distances live on the
// normalized copies. Deterministic for fixed (set order, k, metric, seed).
Clustering kmeans(const VectorSet& set, std::size_t k, Metric metric,
                  std::uint64_t seed, const KMeansOptions& options = {});

// Sum of squared distances in the clustering's metric space.
double wcss(const VectorSet& set, const Clustering& clustering);

// Point coordinates in the clustering's metric space: unchanged for
// euclidean, L2-normalized for cosine. Throws ZeroNorm for cosine.
std::vector<double> metric_space_values(const VectorSet& set, Metric metric);

nlohmann::json to_json(const Clustering& clustering);
Clustering clustering_from_json(const nlohmann::json& j);

}  // namespace repdistill
