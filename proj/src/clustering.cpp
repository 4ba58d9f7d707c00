#include "repdistill/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "repdistill/error.hpp"
#include "repdistill/rng.hpp"

namespace repdistill {

using json = nlohmann::json;

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

// Row-major matrix view over metric-space coordinates.
struct Points {
  std::span<const double> values;
  std::size_t dim;

  std::size_t size() const { return values.size() / dim; }
  std::span<const double> row(std::size_t i) const {
    return values.subspan(i * dim, dim);
  }
};

std::size_t nearest(const Points& pts, std::size_t i,
                    const std::vector<std::vector<double>>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(pts.row(i), centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<std::vector<double>> seed_plus_plus(const Points& pts,
                                                std::size_t k, Rng& rng) {
  const std::size_t n = pts.size();
  std::vector<std::vector<double>> centers;
  centers.reserve(k);
  const auto first = static_cast<std::size_t>(rng.below(n));
  centers.emplace_back(pts.row(first).begin(), pts.row(first).end());

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = squared_distance(pts.row(i), centers.front());
  }
  while (centers.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Every point coincides with a chosen center; any pick is equivalent.
      pick = static_cast<std::size_t>(rng.below(n));
    }
    centers.emplace_back(pts.row(pick).begin(), pts.row(pick).end());
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(pts.row(i), centers.back()));
    }
  }
  return centers;
}

// Moves the point farthest from its centroid (taken from a cluster with more
// than one member) into each empty cluster.
bool repair_empty(const Points& pts, std::vector<std::size_t>& labels,
                  std::vector<std::vector<double>>& centroids) {
  bool moved = false;
  const std::size_t k = centroids.size();
  std::vector<std::size_t> counts(k, 0);
  for (auto l : labels) ++counts[l];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = pts.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (counts[labels[i]] < 2) continue;
      const double d = squared_distance(pts.row(i), centroids[labels[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    --counts[labels[far]];
    labels[far] = c;
    counts[c] = 1;
    centroids[c].assign(pts.row(far).begin(), pts.row(far).end());
    moved = true;
  }
  return moved;
}

// Centroid means, summed in ascending record order.
void update_centroids(const Points& pts, const std::vector<std::size_t>& labels,
                      std::vector<std::vector<double>>& centroids) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> counts(k, 0);
  for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto& c = centroids[labels[i]];
    const auto row = pts.row(i);
    for (std::size_t d = 0; d < pts.dim; ++d) c[d] += row[d];
    ++counts[labels[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (auto& v : centroids[c]) v /= static_cast<double>(counts[c]);
  }
}

// Single-point moves: a point leaves cluster a for b whenever that lowers
// the total, using the exact cost change of moving one point between means.
std::size_t refine_single_moves(const Points& pts, std::vector<std::size_t>& labels,
                                std::vector<std::vector<double>>& centroids,
                                std::size_t max_passes) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> counts(k, 0);
  for (auto l : labels) ++counts[l];
  std::size_t passes = 0;
  for (bool moved = true; moved && passes < max_passes; ++passes) {
    moved = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::size_t a = labels[i];
      if (counts[a] < 2) continue;
      const auto x = pts.row(i);
      const double na = static_cast<double>(counts[a]);
      const double leave = na / (na - 1.0) * squared_distance(x, centroids[a]);
      std::size_t best = a;
      double best_gain = 1e-12 * leave;
      for (std::size_t b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = static_cast<double>(counts[b]);
        const double gain = leave - nb / (nb + 1.0) * squared_distance(x, centroids[b]);
        if (gain > best_gain) {
          best_gain = gain;
          best = b;
        }
      }
      if (best == a) continue;
      const double nb = static_cast<double>(counts[best]);
      for (std::size_t d = 0; d < pts.dim; ++d) {
        centroids[a][d] = (na * centroids[a][d] - x[d]) / (na - 1.0);
        centroids[best][d] = (nb * centroids[best][d] + x[d]) / (nb + 1.0);
      }
      --counts[a];
      ++counts[best];
      labels[i] = best;
      moved = true;
    }
  }
  return passes;
}

double total_wcss(const Points& pts, const std::vector<std::size_t>& labels,
                  const std::vector<std::vector<double>>& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s += squared_distance(pts.row(i), centroids[labels[i]]);
  }
  return s;
}

}  // namespace

std::string_view to_string(Metric metric) {
  return metric == Metric::Cosine ? "cosine" : "euclidean";
}

Metric parse_metric(std::string_view text) {
  if (text == "cosine") return Metric::Cosine;
  if (text == "euclidean") return Metric::Euclidean;
  throw Error(ErrorCode::InvalidArgument,
              "unknown metric '" + std::string(text) + "'");
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::ZeroNorm, "cosine similarity of a zero vector");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

NeighborList rank_by_similarity(std::string_view center, const VectorSet& set) {
  const std::size_t ci = set.find(center);
  if (ci == VectorSet::npos) {
    throw Error(ErrorCode::UnknownId, "'" + std::string(center) + "'");
  }
  struct Entry {
    double sim;
    std::size_t index;
  };
  std::vector<Entry> entries;
  entries.reserve(set.size() - 1);
  const auto c = set.row(ci);
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i == ci) continue;
    entries.push_back({cosine_similarity(c, set.row(i)), i});
  }
  const auto& ids = set.ids();
  std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return ids[a.index] < ids[b.index];
  });
  NeighborList out;
  out.center_id = std::string(center);
  out.neighbor_ids.reserve(entries.size());
  out.similarities.reserve(entries.size());
  for (const auto& e : entries) {
    out.neighbor_ids.push_back(ids[e.index]);
    out.similarities.push_back(e.sim);
  }
  return out;
}

NeighborList knn_neighbors(std::string_view center, const VectorSet& set,
                           std::size_t k) {
  if (set.find(center) == VectorSet::npos) {
    throw Error(ErrorCode::UnknownId, "'" + std::string(center) + "'");
  }
  if (k == 0 || k + 1 > set.size()) {
    throw Error(ErrorCode::KTooLarge,
                "k=" + std::to_string(k) + " needs 1 <= k <= " +
                    std::to_string(set.size() - 1));
  }
  NeighborList out = rank_by_similarity(center, set);
  out.neighbor_ids.resize(k);
  out.similarities.resize(k);
  return out;
}

std::size_t Clustering::cluster_of(std::string_view id) const {
  auto it = assignments.find(std::string(id));
  if (it == assignments.end()) {
    throw Error(ErrorCode::MissingAssignment, "'" + std::string(id) + "'");
  }
  return it->second;
}

std::vector<double> metric_space_values(const VectorSet& set, Metric metric) {
  std::vector<double> values(set.values().begin(), set.values().end());
  if (metric == Metric::Euclidean) return values;
  const std::size_t dim = set.dim();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double n = norm(set.row(i));
    if (n == 0.0) {
      throw Error(ErrorCode::ZeroNorm,
                  "record '" + set.ids()[i] + "' has zero norm");
    }
    for (std::size_t d = 0; d < dim; ++d) values[i * dim + d] /= n;
  }
  return values;
}

Clustering kmeans(const VectorSet& set, std::size_t k, Metric metric,
                  std::uint64_t seed, const KMeansOptions& options) {
  if (k == 0) {
    throw Error(ErrorCode::InvalidArgument, "k must be positive");
  }
  if (k > set.size()) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds " +
                                          std::to_string(set.size()) +
                                          " points");
  }
  const std::vector<double> values = metric_space_values(set, metric);
  const Points pts{values, set.dim()};
  const std::size_t n = pts.size();

  Rng rng(seed);
  auto centroids = seed_plus_plus(pts, k, rng);
  // k marks "unassigned" so the first pass always counts as a change.
  std::vector<std::size_t> labels(n, k);

  double previous = std::numeric_limits<double>::infinity();
  double current = 0.0;
  std::size_t iterations = 0;
  while (iterations < options.max_iterations) {
    ++iterations;
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest(pts, i, centroids);
      if (c != labels[i]) {
        labels[i] = c;
        changed = true;
      }
    }
    changed = repair_empty(pts, labels, centroids) || changed;
    update_centroids(pts, labels, centroids);
    current = total_wcss(pts, labels, centroids);
    if (!changed) break;
    if (std::isfinite(previous) &&
        std::abs(previous - current) <=
            options.relative_tolerance * std::max(previous, 0.0)) {
      break;
    }
    if (current == 0.0) break;
    previous = current;
  }
  if (k > 1 && current > 0.0) {
    iterations += refine_single_moves(pts, labels, centroids, options.max_iterations);
    update_centroids(pts, labels, centroids);
    current = total_wcss(pts, labels, centroids);
  }

  Clustering out;
  out.k = k;
  out.metric = metric;
  out.seed = seed;
  out.iterations = iterations;
  out.wcss = current;
  out.centroids = std::move(centroids);
  for (std::size_t i = 0; i < n; ++i) {
    out.assignments.emplace(set.ids()[i], labels[i]);
  }
  return out;
}

double wcss(const VectorSet& set, const Clustering& clustering) {
  const std::vector<double> values = metric_space_values(set, clustering.metric);
  const Points pts{values, set.dim()};
  double s = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::size_t c = clustering.cluster_of(set.ids()[i]);
    if (c >= clustering.centroids.size() ||
        clustering.centroids[c].size() != set.dim()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "centroid " + std::to_string(c) + " does not match set");
    }
    s += squared_distance(pts.row(i), clustering.centroids[c]);
  }
  return s;
}

json to_json(const Clustering& c) {
  json assignments = json::object();
  for (const auto& [id, idx] : c.assignments) assignments[id] = idx;
  return json{{"k", c.k},
              {"metric", std::string(to_string(c.metric))},
              {"seed", c.seed},
              {"iterations", c.iterations},
              {"wcss", c.wcss},
              {"centroids", c.centroids},
              {"assignments", std::move(assignments)}};
}

Clustering clustering_from_json(const json& j) {
  Clustering c;
  try {
    c.k = j.at("k").get<std::size_t>();
    c.metric = parse_metric(j.at("metric").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.iterations = j.at("iterations").get<std::size_t>();
    c.wcss = j.at("wcss").get<double>();
    c.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
    for (const auto& [id, idx] : j.at("assignments").items()) {
      c.assignments.emplace(id, idx.get<std::size_t>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("malformed clustering: ") + e.what());
  }
  if (c.centroids.size() != c.k) {
    throw Error(ErrorCode::InvalidArgument, "centroid count differs from k");
  }
  for (const auto& [id, idx] : c.assignments) {
    if (idx >= c.k) {
      throw Error(ErrorCode::InvalidArgument,
                  "assignment of '" + id + "' out of range");
    }
  }
  return c;
}

}  // namespace repdistill
