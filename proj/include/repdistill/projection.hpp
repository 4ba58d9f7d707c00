#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "repdistill/clustering.hpp"
#include "repdistill/vectorstore.hpp"

namespace repdistill {

struct Projection2D {
  std::array<std::vector<double>, 2> components;
  std::array<double, 2> explained_variance_ratio{};
  std::map<std::string, std::pair<double, double>> points;
  std::vector<double> mean;
  bool rank_deficient = false;  // second ratio is (numerically) zero
};

struct PcaOptions {
  // Dense eigendecomposition up to this dimension, power iteration above it.
  std::size_t dense_max_dim = 4096;
  double power_tolerance = 1e-10;
  std::size_t power_max_iterations = 20000;
};

// Top-2 principal components of the mean-centered set. Each component is
// signed so its largest-magnitude coordinate is non-negative.
Projection2D pca_fit(const VectorSet& set, const PcaOptions& options = {});

// CSV with header id,x,y,cluster; rows sorted by id.
std::string scatter_csv(const Projection2D& proj, const Clustering& clustering);
void export_scatter(const Projection2D& proj, const Clustering& clustering,
                    const std::filesystem::path& path);

nlohmann::json to_json(const Projection2D& proj);

}  // namespace repdistill
