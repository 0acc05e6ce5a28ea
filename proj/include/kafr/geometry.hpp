#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "kafr/error.hpp"

namespace kafr {

using Point = Eigen::Vector2d;
/// Polygon vertices as columns, in drawing order (either orientation).
using Polygon = Eigen::Matrix2Xd;

/// Signed shoelace area of a closed polygon given as a 2xN vertex matrix.
template <typename Derived>
typename Derived::Scalar signed_area(const Eigen::MatrixBase<Derived>& vertices) {
  static_assert(Derived::RowsAtCompileTime == 2 || Derived::RowsAtCompileTime == Eigen::Dynamic);
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = vertices.cols();
  Scalar twice_area(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = (i + 1) % n;
    twice_area += vertices(0, i) * vertices(1, j) - vertices(0, j) * vertices(1, i);
  }
  return twice_area / Scalar(2);
}

/// Area-weighted centroid of a simple polygon.
///
/// Vertices are shifted by the first vertex before accumulating, which keeps
/// the cross products small for polygons far from the origin. Throws
/// DegeneratePolygon for fewer than 3 vertices or zero area.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 2, 1> polygon_centroid(
    const Eigen::MatrixBase<Derived>& vertices) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = vertices.cols();
  if (vertices.rows() != 2 || n < 3) {
    throw Error(ErrorKind::DegeneratePolygon,
                "polygon needs at least 3 vertices, got " + std::to_string(n));
  }
  const Eigen::Matrix<Scalar, 2, 1> origin = vertices.col(0);
  Scalar twice_area(0);
  Eigen::Matrix<Scalar, 2, 1> weighted = Eigen::Matrix<Scalar, 2, 1>::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Matrix<Scalar, 2, 1> a = vertices.col(i) - origin;
    const Eigen::Matrix<Scalar, 2, 1> b = vertices.col((i + 1) % n) - origin;
    const Scalar cross = a.x() * b.y() - b.x() * a.y();
    twice_area += cross;
    weighted += (a + b) * cross;
  }
  if (twice_area == Scalar(0) || !std::isfinite(static_cast<double>(twice_area))) {
    throw Error(ErrorKind::DegeneratePolygon, "polygon has zero area");
  }
  return origin + weighted / (Scalar(3) * twice_area);
}

}  // namespace kafr
