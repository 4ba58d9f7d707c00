#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "repdistill/clustering.hpp"
#include "repdistill/vectorstore.hpp"

namespace repdistill {

// Davies-Bouldin index: mean over clusters of the worst
// (sigma_i + sigma_j) / d(c_i, c_j), with sigma the mean point-to-centroid
// distance. Distances are taken in the clustering's metric space.
double davies_bouldin(const VectorSet& set, const Clustering& clustering);

struct ElbowResult {
  std::size_t k = 0;
  bool degenerate = false;  // every candidate lies on the chord
};

// Knee of a decreasing curve: both axes are scaled to [0,1] and the candidate
// farthest from the chord between the first and last points wins. Ties go to
// the smallest k.
ElbowResult elbow_k(std::span<const std::size_t> k_values,
                    std::span<const double> wcss_curve);

struct KSweepReport {
  std::vector<std::size_t> k_values;
  std::vector<double> wcss_curve;  // best-of-seeds WCSS per k
  std::vector<double> db_curve;    // Davies-Bouldin of that best run; +inf when undefined
  std::vector<std::uint64_t> best_seeds;
  std::size_t elbow_k = 0;
  std::size_t db_k = 0;  // 0 when no candidate has a defined index
  std::size_t selected_k = 0;
  std::optional<std::size_t> second_best_k;
  bool agreement = false;
  bool degenerate_curve = false;
  Metric metric = Metric::Cosine;
};

struct SweepResult {
  KSweepReport report;
  std::vector<Clustering> best;  // parallel to report.k_values
};

SweepResult sweep_k(const VectorSet& set, std::size_t k_min, std::size_t k_max,
                    Metric metric, std::span<const std::uint64_t> seeds);

nlohmann::json to_json(const KSweepReport& report);
// Columns: k, wcss, db.
std::string to_csv(const KSweepReport& report);

}  // namespace repdistill
