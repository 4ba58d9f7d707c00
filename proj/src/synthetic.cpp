#include "repdistill/synthetic.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fileio.hpp"
#include "repdistill/error.hpp"
#include "repdistill/rng.hpp"

namespace repdistill::synthetic {

namespace {

// Box-Muller on the portable generator.
double gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

VectorSet gaussian_blobs(const std::vector<std::vector<double>>& centers,
                         std::size_t per_blob, double sigma, std::uint64_t seed,
                         Space space, std::string model_tag) {
  if (centers.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no blob centers");
  }
  const std::size_t dim = centers.front().size();
  Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<double> values;
  for (std::size_t b = 0; b < centers.size(); ++b) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      ids.push_back(fmt::format("b{}_{:04}", b, i));
      for (std::size_t d = 0; d < dim; ++d) {
        values.push_back(centers[b][d] + sigma * gaussian(rng));
      }
    }
  }
  VectorSetHeader header;
  header.space = space;
  header.model_tag = std::move(model_tag);
  header.dim = static_cast<std::uint32_t>(dim);
  return VectorSet::create(std::move(header), std::move(ids), std::move(values));
}

std::vector<std::vector<double>> spaced_centers(std::size_t count,
                                                std::size_t dim, double box,
                                                double min_spacing,
                                                std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> centers;
  for (std::size_t attempt = 0; centers.size() < count; ++attempt) {
    if (attempt > 100000) {
      throw Error(ErrorCode::InvalidArgument, "cannot place spaced centers");
    }
    std::vector<double> c(dim);
    for (auto& v : c) v = box * rng.uniform();
    bool ok = true;
    for (const auto& other : centers) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) s += (c[d] - other[d]) * (c[d] - other[d]);
      if (std::sqrt(s) < min_spacing) {
        ok = false;
        break;
      }
    }
    if (ok) centers.push_back(std::move(c));
  }
  return centers;
}

std::size_t blob_of(const std::string& id) {
  return std::stoul(id.substr(1, id.find('_') - 1));
}

BundlePaths write_bundle(const std::filesystem::path& dir, std::size_t per_blob,
                         std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  constexpr std::size_t kDim = 8;
  auto axis_centers = [&](std::vector<std::size_t> axes) {
    std::vector<std::vector<double>> centers;
    for (auto a : axes) {
      std::vector<double> c(kDim, 1.0);
      c[a] = 10.0;
      centers.push_back(std::move(c));
    }
    return centers;
  };
  BundlePaths paths{dir / "embedding.jsonl", dir / "encoder.bin",
                    dir / "corpus.jsonl"};
  save_vector_set(gaussian_blobs(axis_centers({0, 1, 2}), per_blob, 0.4, seed,
                                 Space::Embedding),
                  paths.embedding, VectorFormat::Jsonl);
  save_vector_set(gaussian_blobs(axis_centers({5, 3, 6}), per_blob, 0.4,
                                 seed + 1, Space::Encoder),
                  paths.encoder, VectorFormat::Binary);

  static const char* const kSentences[] = {
      "The council approved the new budget on Tuesday.",
      "Local schools will receive additional funding next year.",
      "Officials said the plan reduces the deficit by half.",
      "Critics argued the cuts fall hardest on rural areas.",
      "The mayor promised a public review of every program.",
      "Residents can comment on the proposal until March.",
      "A similar measure failed narrowly two years ago.",
      "Analysts expect the debate to continue through spring.",
  };
  std::string corpus;
  for (std::size_t d = 0; d < 10; ++d) {
    std::vector<std::string> sources;
    const std::size_t n_sources = d % 2 == 0 ? 1 : 2;
    for (std::size_t s = 0; s < n_sources; ++s) {
      std::string text;
      for (std::size_t k = 0; k < 6; ++k) {
        text += kSentences[(d + s * 3 + k) % 8];
        text += ' ';
      }
      sources.push_back(std::move(text));
    }
    const std::string reference =
        std::string(kSentences[d % 8]) + " Document " + std::to_string(d) +
        " summarises the vote.";
    corpus += nlohmann::json{{"id", fmt::format("doc{:02}", d)},
                             {"sources", sources},
                             {"reference", reference}}
                  .dump() +
              "\n";
  }
  detail::write_file(paths.corpus, corpus);
  return paths;
}

}  // namespace repdistill::synthetic
