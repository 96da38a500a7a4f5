#include "artsearch/analytics/pca.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "artsearch/common/error.hpp"

namespace artsearch::analytics {

PcaResult pca2d(const PointSet& points) { return pca2d(canonical_matrix(points)); }

PcaResult pca2d(const Matrix& m) {
  if (m.rows < 2) throw_validation("projection needs at least two points");
  const size_t n = m.rows, d = m.cols;
  Eigen::MatrixXd x(n, d);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) x(i, j) = m.row(i)[j];
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;

  PcaResult out;
  out.projection.method = "pca";
  out.projection.ids = m.ids;
  out.projection.coords.assign(n, {0.0, 0.0});
  for (auto& c : out.components) c.assign(d, 0.0);

  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
  out.total_variance = cov.trace();
  if (!(out.total_variance > 0.0)) {
    out.projection.degenerate = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::kInternal, "eigendecomposition failed");
  // Eigenvalues come out ascending.
  for (size_t c = 0; c < 2 && c < d; ++c) {
    const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - c);
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index peak = 0;
    for (Eigen::Index j = 1; j < v.size(); ++j) {
      if (std::abs(v(j)) > std::abs(v(peak))) peak = j;
    }
    if (v(peak) < 0) v = -v;
    out.explained_variance[c] = std::max(0.0, solver.eigenvalues()(col));
    const Eigen::VectorXd proj = x * v;
    for (size_t i = 0; i < n; ++i) out.projection.coords[i][c] = proj(static_cast<Eigen::Index>(i));
    for (size_t j = 0; j < d; ++j) out.components[c][j] = v(static_cast<Eigen::Index>(j));
  }
  return out;
}

}  // namespace artsearch::analytics
