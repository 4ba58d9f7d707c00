#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "repdistill/vectorstore.hpp"

namespace repdistill::synthetic {

// Isotropic Gaussian blobs. Record ids are "b<blob>_<index>" (zero padded),
// so blob membership can be read back from the id.
VectorSet gaussian_blobs(const std::vector<std::vector<double>>& centers,
                         std::size_t per_blob, double sigma, std::uint64_t seed,
                         Space space, std::string model_tag = "synthetic");

// `count` centers drawn uniformly from [0, box]^dim, pairwise at least
// `min_spacing` apart (rejection sampling).
std::vector<std::vector<double>> spaced_centers(std::size_t count,
                                                std::size_t dim, double box,
                                                double min_spacing,
                                                std::uint64_t seed);

// Blob index encoded in an id produced by gaussian_blobs.
std::size_t blob_of(const std::string& id);

struct BundlePaths {
  std::filesystem::path embedding;
  std::filesystem::path encoder;
  std::filesystem::path corpus;
};

// Three direction-separated blobs of `per_blob` vectors in each space (the
// encoder space permutes blob directions), plus a small text corpus.
BundlePaths write_bundle(const std::filesystem::path& dir,
                         std::size_t per_blob = 30, std::uint64_t seed = 7);

}  // namespace repdistill::synthetic
