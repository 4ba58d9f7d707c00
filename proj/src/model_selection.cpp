#include "repdistill/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "repdistill/error.hpp"

namespace repdistill {

using json = nlohmann::json;

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// Local minima of the curve (one-sided at the ends), excluding flat runs.
std::vector<std::size_t> local_minima(std::span<const double> curve) {
  std::vector<std::size_t> out;
  const std::size_t n = curve.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool has_left = i > 0;
    const bool has_right = i + 1 < n;
    if (has_left && curve[i] > curve[i - 1]) continue;
    if (has_right && curve[i] > curve[i + 1]) continue;
    const bool strict = (has_left && curve[i] < curve[i - 1]) ||
                        (has_right && curve[i] < curve[i + 1]);
    if (strict) out.push_back(i);
  }
  return out;
}

}  // namespace

double davies_bouldin(const VectorSet& set, const Clustering& clustering) {
  const std::size_t k = clustering.k;
  if (k < 2) {
    throw Error(ErrorCode::KTooSmall, "Davies-Bouldin needs k >= 2");
  }
  const std::vector<double> values =
      metric_space_values(set, clustering.metric);
  const std::size_t dim = set.dim();

  std::vector<double> spread(k, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::size_t c = clustering.cluster_of(set.ids()[i]);
    if (c >= k || clustering.centroids[c].size() != dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "centroid " + std::to_string(c) + " does not match set");
    }
    spread[c] += distance(std::span<const double>(values).subspan(i * dim, dim),
                          clustering.centroids[c]);
    ++counts[c];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "cluster " + std::to_string(c) + " is empty");
    }
    spread[c] /= static_cast<double>(counts[c]);
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double d = distance(clustering.centroids[i], clustering.centroids[j]);
      if (d == 0.0) {
        throw Error(ErrorCode::CoincidentCentroids,
                    "clusters " + std::to_string(i) + " and " +
                        std::to_string(j));
      }
      worst = std::max(worst, (spread[i] + spread[j]) / d);
    }
    sum += worst;
  }
  return sum / static_cast<double>(k);
}

ElbowResult elbow_k(std::span<const std::size_t> k_values,
                    std::span<const double> wcss_curve) {
  if (k_values.size() < 3 || wcss_curve.size() != k_values.size()) {
    throw Error(ErrorCode::TooFewCandidates,
                "elbow needs >= 3 candidates with one WCSS value each");
  }
  const std::size_t n = k_values.size();
  const double x0 = static_cast<double>(k_values.front());
  const double x_span = static_cast<double>(k_values.back()) - x0;
  const auto [lo, hi] = std::minmax_element(wcss_curve.begin(), wcss_curve.end());
  const double y_span = *hi - *lo;

  auto nx = [&](std::size_t i) {
    return x_span > 0 ? (static_cast<double>(k_values[i]) - x0) / x_span : 0.0;
  };
  auto ny = [&](std::size_t i) {
    return y_span > 0 ? (wcss_curve[i] - *lo) / y_span : 0.0;
  };

  // Chord from the first to the last normalized point.
  const double ax = nx(0), ay = ny(0);
  const double bx = nx(n - 1), by = ny(n - 1);
  const double len = std::hypot(bx - ax, by - ay);

  ElbowResult out{k_values.front(), true};
  if (len == 0.0) return out;
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cross = (bx - ax) * (ny(i) - ay) - (by - ay) * (nx(i) - ax);
    const double d = std::abs(cross) / len;
    if (d > best) {
      best = d;
      out.k = k_values[i];
    }
  }
  out.degenerate = best <= 1e-12;
  if (out.degenerate) out.k = k_values.front();
  return out;
}

SweepResult sweep_k(const VectorSet& set, std::size_t k_min, std::size_t k_max,
                    Metric metric, std::span<const std::uint64_t> seeds) {
  if (k_min < 2 || k_min >= k_max) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("need 2 <= k_min < k_max (got {}..{})", k_min,
                            k_max));
  }
  if (k_max > set.size()) {
    throw Error(ErrorCode::KTooLarge,
                fmt::format("k_max={} exceeds {} points", k_max, set.size()));
  }
  if (seeds.empty()) {
    throw Error(ErrorCode::InvalidArgument, "at least one seed is required");
  }

  SweepResult result;
  KSweepReport& r = result.report;
  r.metric = metric;
  // Runs are folded in (k, seed) order; the first of equal WCSS values wins.
  for (std::size_t k = k_min; k <= k_max; ++k) {
    std::optional<Clustering> best;
    for (std::uint64_t seed : seeds) {
      Clustering c = kmeans(set, k, metric, seed);
      if (!best || c.wcss < best->wcss) best = std::move(c);
    }
    r.k_values.push_back(k);
    r.wcss_curve.push_back(best->wcss);
    double db = std::numeric_limits<double>::infinity();
    try {
      db = davies_bouldin(set, *best);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CoincidentCentroids) throw;
    }
    r.db_curve.push_back(db);
    r.best_seeds.push_back(best->seed);
    result.best.push_back(std::move(*best));
  }

  // The elbow is taken on the running minimum of the curve.
  std::vector<double> smoothed = r.wcss_curve;
  for (std::size_t i = 1; i < smoothed.size(); ++i) {
    smoothed[i] = std::min(smoothed[i], smoothed[i - 1]);
  }
  const ElbowResult elbow = elbow_k(r.k_values, smoothed);
  r.elbow_k = elbow.k;
  r.degenerate_curve = elbow.degenerate;

  const auto db_best = static_cast<std::size_t>(
      std::min_element(r.db_curve.begin(), r.db_curve.end()) -
      r.db_curve.begin());
  if (std::isfinite(r.db_curve[db_best])) {
    r.db_k = r.k_values[db_best];
    r.agreement = r.elbow_k == r.db_k;
    r.selected_k = r.db_k;
  } else {
    // No k has a defined index (coincident centroids everywhere).
    r.db_k = 0;
    r.agreement = false;
    r.selected_k = r.elbow_k;
  }

  std::vector<std::size_t> minima = local_minima(r.db_curve);
  std::erase_if(minima, [&](std::size_t i) {
    return i == db_best || !std::isfinite(r.db_curve[i]);
  });
  std::stable_sort(minima.begin(), minima.end(),
                   [&](std::size_t a, std::size_t b) {
                     return r.db_curve[a] < r.db_curve[b];
                   });
  if (!minima.empty()) r.second_best_k = r.k_values[minima.front()];
  return result;
}

json to_json(const KSweepReport& r) {
  json j = {{"k_values", r.k_values},
            {"wcss_curve", r.wcss_curve},
            {"db_curve", r.db_curve},
            {"best_seeds", r.best_seeds},
            {"metric", std::string(to_string(r.metric))},
            {"elbow_k", r.elbow_k},
            {"db_k", r.db_k},
            {"selected_k", r.selected_k},
            {"agreement", r.agreement},
            {"degenerate_curve", r.degenerate_curve}};
  j["second_best_k"] =
      r.second_best_k ? json(*r.second_best_k) : json(nullptr);
  return j;
}

std::string to_csv(const KSweepReport& r) {
  std::string out = "k,wcss,db\n";
  for (std::size_t i = 0; i < r.k_values.size(); ++i) {
    out += fmt::format("{},{},{}\n", r.k_values[i], r.wcss_curve[i],
                       r.db_curve[i]);
  }
  return out;
}

}  // namespace repdistill
