#pragma once

// Dense least-squares kernel. The solve goes through a Householder QR of the
// system matrix; the normal-equations form (A^T A)^-1 A^T b is kept alongside
// for cross-checking, since it is the same minimiser in exact arithmetic.

#include "fardoa/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>

namespace fardoa::lstsq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Spectrum {
  Vec singular_values;  // nonincreasing
  Mat right_vectors;    // D x D, columns matched to singular_values
  Eigen::Index rank = 0;

  [[nodiscard]] double condition() const {
    if (singular_values.size() == 0) return std::numeric_limits<double>::infinity();
    const double smin = singular_values(singular_values.size() - 1);
    return smin > 0.0 ? singular_values(0) / smin : std::numeric_limits<double>::infinity();
  }

  // Orthonormal basis (columns) for the directions the matrix cannot see.
  [[nodiscard]] Mat null_space() const {
    const Eigen::Index d = right_vectors.cols();
    return right_vectors.rightCols(d - rank);
  }
};

inline Spectrum spectrum(const Mat& a) {
  Spectrum s;
  const Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const Eigen::Index d = a.cols();
  s.singular_values = Vec::Zero(d);
  s.singular_values.head(svd.singularValues().size()) = svd.singularValues();
  s.right_vectors = svd.matrixV();
  const double smax = s.singular_values.size() > 0 ? s.singular_values(0) : 0.0;
  const double tol = static_cast<double>(std::max(a.rows(), a.cols())) * std::numeric_limits<double>::epsilon() * smax;
  s.rank = 0;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (s.singular_values(k) > tol) ++s.rank;
  }
  return s;
}

// Minimiser of |a z - b|_2 for a full-column-rank a, via Householder QR.
inline Vec solve(const Mat& a, const Vec& b) {
  if (a.rows() != b.size()) throw ValidationError("least squares: row count mismatch");
  if (a.rows() < a.cols()) throw ValidationError("least squares: fewer equations than unknowns");
  return a.householderQr().solve(b);
}

// (a^T a)^-1 a^T b formed literally.
inline Vec solve_normal_equations(const Mat& a, const Vec& b) {
  if (a.rows() != b.size()) throw ValidationError("least squares: row count mismatch");
  const Mat gram = a.transpose() * a;
  return gram.inverse() * (a.transpose() * b);
}

}  // namespace fardoa::lstsq
