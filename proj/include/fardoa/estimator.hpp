#pragma once

// Direction-of-arrival estimation from far-field TDOA/FDOA measurements.
//
// In the far field both measurement vectors are linear in the unit direction
// u:  f = -P V u,  tau = -P X u.  The direction is the least-squares solution
// of that system, normalised; its norm before normalisation is kept as a model
// consistency diagnostic (close to 1 when the far-field model holds).

#include "fardoa/error.hpp"
#include "fardoa/lstsq.hpp"
#include "fardoa/measurement.hpp"
#include "fardoa/scenario.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fardoa {

enum class SystemKind { fdoa, tdoa, stacked };

inline std::string_view to_string(SystemKind k) {
  switch (k) {
    case SystemKind::fdoa: return "fdoa";
    case SystemKind::tdoa: return "tdoa";
    case SystemKind::stacked: return "stacked";
  }
  return "";
}

inline SystemKind system_kind(MeasurementKind k) {
  return k == MeasurementKind::fdoa ? SystemKind::fdoa : SystemKind::tdoa;
}

struct SystemMatrix {
  Mat matrix;        // M x D, measurement units
  SystemKind kind = SystemKind::fdoa;
  Vec row_weights;   // applied to rows of matrix and measurements before solving
  std::size_t fdoa_rows = 0;  // stacked: FDOA block first, TDOA block after
  Eigen::Index rank = 0;
  Vec singular_values;  // of the weighted matrix, nonincreasing
  Mat null_space;       // D x (D - rank)

  [[nodiscard]] Eigen::Index rows() const noexcept { return matrix.rows(); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return matrix.cols(); }
  [[nodiscard]] Mat weighted() const { return row_weights.asDiagonal() * matrix; }

  [[nodiscard]] double condition_number() const {
    if (singular_values.size() == 0) return std::numeric_limits<double>::infinity();
    const double smin = singular_values(singular_values.size() - 1);
    return smin > 0.0 ? singular_values(0) / smin : std::numeric_limits<double>::infinity();
  }
};

// Wraps an arbitrary system matrix; weights default to ones.
inline SystemMatrix make_system(Mat a, SystemKind kind, Vec weights = {}) {
  SystemMatrix sys;
  sys.matrix = std::move(a);
  sys.kind = kind;
  sys.row_weights = weights.size() == 0 ? Vec::Ones(sys.matrix.rows()) : std::move(weights);
  if (sys.row_weights.size() != sys.matrix.rows()) throw ValidationError("row weight count mismatch");
  sys.fdoa_rows = kind == SystemKind::tdoa ? 0 : static_cast<std::size_t>(sys.matrix.rows());
  const auto spec = lstsq::spectrum(sys.weighted());
  sys.rank = spec.rank;
  sys.singular_values = spec.singular_values;
  sys.null_space = spec.null_space();
  return sys;
}

// Per-block measurement noise standard deviations used to weight a stacked system.
struct BlockNoise {
  double fdoa_sigma = 1.0;
  double tdoa_sigma = 1.0;
};

// FDOA: -P V.  TDOA: -P X with X centred on the receiver centroid.
// Stacked rows are FDOA then TDOA, each block scaled by 1/sigma when block noise
// levels are given, otherwise by 1/(largest singular value of the block).
inline SystemMatrix build_system(const Scenario& s, SystemKind kind, std::optional<BlockNoise> noise = {}) {
  const auto p = differencing_matrix(s.pairs(), s.receiver_count());
  const Mat f = farfield_map(s, p, MeasurementKind::fdoa) * s.units.fdoa_factor();
  const Mat t = farfield_map(s, p, MeasurementKind::tdoa) * s.units.tdoa_factor();
  if (kind == SystemKind::fdoa) return make_system(f, kind);
  if (kind == SystemKind::tdoa) return make_system(t, kind);

  auto block_weight = [](const Mat& block, std::optional<double> sigma) {
    if (sigma) {
      if (!(*sigma > 0.0)) throw ValidationError("block noise sigma must be > 0");
      return 1.0 / *sigma;
    }
    const double smax = lstsq::spectrum(block).singular_values(0);
    return smax > 0.0 ? 1.0 / smax : 1.0;
  };
  const double wf = block_weight(f, noise ? std::optional(noise->fdoa_sigma) : std::nullopt);
  const double wt = block_weight(t, noise ? std::optional(noise->tdoa_sigma) : std::nullopt);

  Mat stacked(f.rows() + t.rows(), f.cols());
  stacked << f, t;
  Vec weights(stacked.rows());
  weights << Vec::Constant(f.rows(), wf), Vec::Constant(t.rows(), wt);
  auto sys = make_system(std::move(stacked), SystemKind::stacked, std::move(weights));
  sys.fdoa_rows = static_cast<std::size_t>(f.rows());
  return sys;
}

struct Angles {
  double azimuth = 0.0;               // radians, (-pi, pi]
  std::optional<double> elevation;    // radians, 3D only
};

// 2D: theta = atan2(u_y, u_x) in (-pi, pi]. 3D: azimuth likewise, elevation =
// asin(u_z); azimuth is 0 at the poles.
inline Angles aoa_from_direction(const Vec& u) {
  Angles out;
  if (u.size() < 2 || u.size() > 3) throw ValidationError("direction must have 2 or 3 components");
  if (u(0) == 0.0 && u(1) == 0.0) {
    out.azimuth = 0.0;
  } else {
    out.azimuth = std::atan2(u(1), u(0));
    if (out.azimuth <= -std::numbers::pi) out.azimuth = std::numbers::pi;
  }
  if (u.size() == 3) out.elevation = std::asin(std::clamp(u(2), -1.0, 1.0));
  return out;
}

struct DoaEstimate {
  Vec direction;            // unit
  Vec raw_solution;         // least-squares solution before normalisation
  double residual_norm = 0.0;
  Vec fitted_measurements;  // matrix * raw_solution
  Angles aoa;
  double condition_number = 0.0;
};

inline DoaEstimate estimate_doa(const SystemMatrix& sys, const Vec& values) {
  if (values.size() != sys.rows()) {
    throw ValidationError("measurement count " + std::to_string(values.size()) + " does not match system rows " +
                          std::to_string(sys.rows()));
  }
  if (sys.rank < sys.dim()) {
    std::ostringstream msg;
    msg << "unobservable direction component: system rank " << sys.rank << " < dimension " << sys.dim()
        << "; null space basis (columns):\n"
        << sys.null_space;
    throw UnobservableError(msg.str(), sys.null_space);
  }

  const Mat aw = sys.weighted();
  const Vec mw = sys.row_weights.cwiseProduct(values);
  const Vec z = lstsq::solve(aw, mw);

  const double a_norm = sys.singular_values(0);
  const double m_norm = mw.norm();
  const double z_norm = z.norm();
  if (!(z_norm > 1e-14 * m_norm / a_norm)) throw DegenerateError("degenerate solution: |raw solution| = " + std::to_string(z_norm));

  DoaEstimate est;
  est.raw_solution = z;
  est.direction = z / z_norm;
  est.fitted_measurements = sys.matrix * z;
  est.residual_norm = (values - est.fitted_measurements).norm();
  est.aoa = aoa_from_direction(est.direction);
  est.condition_number = sys.condition_number();
  return est;
}

inline DoaEstimate estimate_doa(const SystemMatrix& sys, const MeasurementVector& m) {
  if (sys.kind != system_kind(m.kind)) {
    throw ValidationError("measurement kind " + std::string(to_string(m.kind)) + " does not match system kind " +
                          std::string(to_string(sys.kind)));
  }
  return estimate_doa(sys, m.values);
}

// Concatenates FDOA and TDOA values in stacked-system order.
inline Vec stack_values(const MeasurementVector& fdoa, const MeasurementVector& tdoa) {
  if (fdoa.kind != MeasurementKind::fdoa || tdoa.kind != MeasurementKind::tdoa) {
    throw ValidationError("stacking needs one FDOA and one TDOA measurement vector");
  }
  Vec out(fdoa.values.size() + tdoa.values.size());
  out << fdoa.values, tdoa.values;
  return out;
}

inline DoaEstimate estimate_doa(const SystemMatrix& sys, const MeasurementVector& fdoa, const MeasurementVector& tdoa) {
  if (sys.kind != SystemKind::stacked) throw ValidationError("two measurement vectors need a stacked system");
  return estimate_doa(sys, stack_values(fdoa, tdoa));
}

// Orthogonal projection of the measurements onto range(A): the fitted values
// of the least-squares solve. For differenced data these are consistent
// around every receiver cycle.
inline MeasurementVector denoise_measurements(const MeasurementVector& m, const SystemMatrix& sys) {
  MeasurementVector out = m;
  out.values = estimate_doa(sys, m).fitted_measurements;
  return out;
}

struct Fix {
  Vec center;
  Vec direction;
};

struct Triangulation {
  Vec position;
  double residual = 0.0;  // weighted sum of squared perpendicular distances
  std::vector<std::size_t> inconsistent;  // fixes pointing away from the solution
};

// Least-squares intersection of the lines {c_k + t u_k}:
//   sum_k w_k (I - u_k u_k^T)(p - c_k) = 0.
inline Triangulation triangulate(const std::vector<Fix>& fixes, const std::vector<double>& weights = {}) {
  if (fixes.size() < 2) throw ValidationError("need >= 2 fixes, got " + std::to_string(fixes.size()));
  if (!weights.empty() && weights.size() != fixes.size()) throw ValidationError("weight count does not match fix count");
  const Eigen::Index dim = fixes.front().center.size();
  if (dim != 2 && dim != 3) throw ValidationError("fixes must be 2D or 3D");

  std::vector<Vec> units;
  units.reserve(fixes.size());
  Mat normal = Mat::Zero(dim, dim);
  Vec rhs = Vec::Zero(dim);
  for (std::size_t k = 0; k < fixes.size(); ++k) {
    const auto& fix = fixes[k];
    if (fix.center.size() != dim || fix.direction.size() != dim) throw ValidationError("fix " + std::to_string(k + 1) + ": dimension mismatch");
    const double n = fix.direction.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("fix " + std::to_string(k + 1) + ": zero or non-finite direction");
    const double w = weights.empty() ? 1.0 : weights[k];
    if (!(w > 0.0)) throw ValidationError("fix " + std::to_string(k + 1) + ": weight must be > 0");
    units.push_back(fix.direction / n);
    const Mat proj = Mat::Identity(dim, dim) - units.back() * units.back().transpose();
    normal += w * proj;
    rhs += w * proj * fix.center;
  }

  const Eigen::SelfAdjointEigenSolver<Mat> eig(normal, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 1e-10 * eig.eigenvalues().maxCoeff())) {
    throw DegenerateError("unresolvable geometry: bearings are parallel");
  }

  Triangulation out;
  out.position = normal.ldlt().solve(rhs);
  for (std::size_t k = 0; k < fixes.size(); ++k) {
    const Vec offset = out.position - fixes[k].center;
    const Vec perp = offset - units[k] * units[k].dot(offset);
    out.residual += (weights.empty() ? 1.0 : weights[k]) * perp.squaredNorm();
    if (units[k].dot(offset) < 0.0) out.inconsistent.push_back(k);
  }
  return out;
}

}  // namespace fardoa
