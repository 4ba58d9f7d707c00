#include "repdistill/projection.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fileio.hpp"
#include "repdistill/error.hpp"

namespace repdistill {

using json = nlohmann::json;

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TopTwo {
  Eigen::VectorXd vectors[2];
  double values[2] = {0.0, 0.0};
};

TopTwo dense_top_two(const RowMatrix& centered) {
  const double denom = static_cast<double>(centered.rows() - 1);
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument, "covariance eigensolver failed");
  }
  // Eigenvalues come back ascending.
  const Eigen::Index d = cov.rows();
  TopTwo out;
  for (int c = 0; c < 2; ++c) {
    out.vectors[c] = solver.eigenvectors().col(d - 1 - c);
    out.values[c] = std::max(0.0, solver.eigenvalues()(d - 1 - c));
  }
  return out;
}

// Power iteration on v -> X^T X v / (n-1), never forming the d x d matrix.
// The second component is found with the first deflated out.
TopTwo iterative_top_two(const RowMatrix& centered, const PcaOptions& options) {
  const double denom = static_cast<double>(centered.rows() - 1);
  const Eigen::Index d = centered.cols();
  TopTwo out;
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      v(i) = 1.0 + 0.01 * static_cast<double>((i * 7919 + c * 104729) % 97);
    }
    auto deflate = [&](Eigen::VectorXd& x) {
      if (c == 1) x -= out.vectors[0].dot(x) * out.vectors[0];
    };
    deflate(v);
    double lambda = 0.0;
    if (v.norm() > 0.0) v.normalize();
    for (std::size_t it = 0; it < options.power_max_iterations; ++it) {
      Eigen::VectorXd w = centered.transpose() * (centered * v) / denom;
      deflate(w);
      const double w_norm = w.norm();
      if (w_norm == 0.0) {
        lambda = 0.0;
        break;
      }
      w /= w_norm;
      const double change = std::min((w - v).norm(), (w + v).norm());
      v = std::move(w);
      lambda = w_norm;
      if (change < options.power_tolerance) break;
    }
    if (v.norm() == 0.0) {
      // No variance left: any unit vector orthogonal to the first will do.
      Eigen::Index j = 0;
      if (c == 1) out.vectors[0].cwiseAbs().minCoeff(&j);
      v = Eigen::VectorXd::Unit(d, j);
      deflate(v);
      v.normalize();
    }
    out.vectors[c] = v;
    out.values[c] = lambda;
  }
  return out;
}

void apply_sign_convention(Eigen::VectorXd& v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0) v = -v;
}

}  // namespace

Projection2D pca_fit(const VectorSet& set, const PcaOptions& options) {
  if (set.size() < 3) {
    throw Error(ErrorCode::TooFewPoints,
                fmt::format("PCA needs >= 3 points, got {}", set.size()));
  }
  if (set.dim() < 2) {
    throw Error(ErrorCode::TooFewPoints, "PCA needs dim >= 2");
  }
  const auto n = static_cast<Eigen::Index>(set.size());
  const auto d = static_cast<Eigen::Index>(set.dim());
  RowMatrix data = Eigen::Map<const RowMatrix>(set.values().data(), n, d);
  const Eigen::RowVectorXd mean = data.colwise().mean();
  data.rowwise() -= mean;

  TopTwo top = set.dim() <= options.dense_max_dim
                   ? dense_top_two(data)
                   : iterative_top_two(data, options);

  const double total_variance =
      data.squaredNorm() / static_cast<double>(n - 1);

  Projection2D proj;
  for (int c = 0; c < 2; ++c) {
    apply_sign_convention(top.vectors[c]);
    proj.components[c].assign(top.vectors[c].data(),
                              top.vectors[c].data() + d);
    proj.explained_variance_ratio[c] =
        total_variance > 0 ? std::clamp(top.values[c] / total_variance, 0.0, 1.0)
                           : 0.0;
  }
  proj.rank_deficient = proj.explained_variance_ratio[1] <= 1e-12;
  if (proj.rank_deficient) proj.explained_variance_ratio[1] = 0.0;
  proj.mean.assign(mean.data(), mean.data() + d);

  const Eigen::VectorXd xs = data * top.vectors[0];
  const Eigen::VectorXd ys = data * top.vectors[1];
  for (Eigen::Index i = 0; i < n; ++i) {
    proj.points.emplace(set.ids()[static_cast<std::size_t>(i)],
                        std::pair{xs(i), ys(i)});
  }
  return proj;
}

std::string scatter_csv(const Projection2D& proj, const Clustering& clustering) {
  std::string out = "id,x,y,cluster\n";
  for (const auto& [id, xy] : proj.points) {
    out += fmt::format("{},{},{},{}\n", detail::csv_field(id), xy.first, xy.second,
                       clustering.cluster_of(id));
  }
  return out;
}

void export_scatter(const Projection2D& proj, const Clustering& clustering,
                    const std::filesystem::path& path) {
  detail::write_file(path, scatter_csv(proj, clustering));
}

json to_json(const Projection2D& proj) {
  return json{{"components", proj.components},
              {"explained_variance_ratio", proj.explained_variance_ratio},
              {"mean", proj.mean},
              {"rank_deficient", proj.rank_deficient}};
}

}  // namespace repdistill
