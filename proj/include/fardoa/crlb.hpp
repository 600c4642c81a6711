#pragma once

// Cramer-Rao bound on the 2D angle of arrival under Gaussian measurement
// noise with covariance Q.
//
// The emitter is parametrised by its bearing theta about the receiver
// centroid at fixed range R: x(theta) = c + R (cos theta, sin theta). With
// g = (df/dx)(dx/dtheta) the sensitivity of the exact measurement model,
// the Fisher information is the scalar J = g^T Q^-1 g and the bound is 1/J.

#include "fardoa/error.hpp"
#include "fardoa/estimator.hpp"
#include "fardoa/measurement.hpp"
#include "fardoa/scenario.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace fardoa {

struct CrlbReport {
  double fisher_information = 0.0;
  double crlb_aoa_variance = 0.0;  // rad^2
  Mat q_used;
  Mat jacobian;    // M x D, d(measurements)/d(emitter position)
  Vec dx_dtheta;
  double theta = 0.0;  // true bearing about the centroid
  double range = 0.0;
};

// Per-receiver Jacobians, N x D. Row i of the frequency-shift Jacobian is
// v_i^T (-I + u_i u_i^T) / r_i; row i of the TOA Jacobian is -u_i^T, where
// u_i = (x_i - x)/r_i.
inline Mat frequency_shift_jacobian(const Scenario& s) {
  const auto los = detail::line_of_sight(s);
  const Mat v = s.velocities();
  Mat out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const Vec u = los.unit.row(i).transpose();
    const Vec vi = v.row(i).transpose();
    out.row(i) = ((u * u.dot(vi) - vi) / los.range(i)).transpose();
  }
  return out * s.units.fdoa_factor();
}

inline Mat toa_jacobian(const Scenario& s) { return -detail::line_of_sight(s).unit * s.units.tdoa_factor(); }

// Row for pair (i, j) is d(d_j)/dx - d(d_i)/dx.
inline Mat fdoa_jacobian(const Scenario& s) {
  return differencing_matrix(s.pairs(), s.receiver_count()).entries * frequency_shift_jacobian(s);
}

inline Mat tdoa_jacobian(const Scenario& s) {
  return differencing_matrix(s.pairs(), s.receiver_count()).entries * toa_jacobian(s);
}

// d/dtheta of range * (cos theta, sin theta).
inline Vec dx_dtheta(double range, double theta) {
  if (!(range > 0.0)) throw ValidationError("range must be > 0");
  return Eigen::Vector2d(-range * std::sin(theta), range * std::cos(theta));
}

namespace detail {

inline CrlbReport aoa_crlb_from_jacobian(const Scenario& s, Mat jacobian, const Mat& q) {
  if (s.dim != 2) throw ValidationError("AOA bound is defined for 2D scenarios only");
  if (q.rows() != jacobian.rows() || q.cols() != jacobian.rows()) {
    throw ValidationError("noise covariance must be " + std::to_string(jacobian.rows()) + "x" +
                          std::to_string(jacobian.rows()));
  }
  const Eigen::LLT<Mat> llt(q);
  if (llt.info() != Eigen::Success) throw ValidationError("noise covariance is not positive definite");

  CrlbReport r;
  r.range = s.emitter_range();
  r.theta = aoa_from_direction(s.true_direction()).azimuth;
  r.dx_dtheta = dx_dtheta(r.range, r.theta);
  r.jacobian = std::move(jacobian);
  r.q_used = q;
  const Vec g = r.jacobian * r.dx_dtheta;
  r.fisher_information = llt.matrixL().solve(g).squaredNorm();
  if (!(r.fisher_information > 1e-300)) {
    throw NumericalError("AOA unobservable at this geometry (Fisher information " +
                         std::to_string(r.fisher_information) + ")");
  }
  r.crlb_aoa_variance = 1.0 / r.fisher_information;
  return r;
}

}  // namespace detail

inline CrlbReport aoa_crlb(const Scenario& s, const Mat& q) {
  return detail::aoa_crlb_from_jacobian(s, fdoa_jacobian(s), q);
}

inline CrlbReport tdoa_aoa_crlb(const Scenario& s, const Mat& q) {
  return detail::aoa_crlb_from_jacobian(s, tdoa_jacobian(s), q);
}

inline CrlbReport aoa_crlb(const Scenario& s, MeasurementKind kind, const Mat& q) {
  return kind == MeasurementKind::fdoa ? aoa_crlb(s, q) : tdoa_aoa_crlb(s, q);
}

}  // namespace fardoa
