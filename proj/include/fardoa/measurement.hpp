#pragma once

// TDOA/FDOA forward models.
//
// Per receiver i at x_i with velocity v_i and a stationary emitter at x:
//   exact frequency shift   d_i = v_i . (x_i - x) / |x_i - x|
//   far-field shift         d_i = -v_i . u,     u = unit direction to the emitter
//   exact time of arrival   tau_i = |x_i - x|
//   far-field TOA           tau_i = |x| - x_i . u
// A pair (i, j) measures the difference "j minus i", so with the differencing
// matrix P the far-field vectors are f = -P V u and tau = -P X u.
//
// Values are in scaled units (no f0/c or 1/c) unless the scenario selects
// physical units, in which case the factor is applied at the output.

#include "fardoa/error.hpp"
#include "fardoa/random.hpp"
#include "fardoa/scenario.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace fardoa {

enum class MeasurementKind { fdoa, tdoa };
enum class ModelKind { exact, far_field };

inline std::string_view to_string(MeasurementKind k) { return k == MeasurementKind::fdoa ? "fdoa" : "tdoa"; }
inline std::string_view to_string(ModelKind m) { return m == ModelKind::exact ? "exact" : "far_field"; }
inline std::string_view to_string(UnitConvention::Mode m) {
  return m == UnitConvention::Mode::scaled ? "scaled" : "physical";
}

inline constexpr double kUnitNormTolerance = 1e-12;

struct DifferencingMatrix {
  Mat entries;  // M x N, row p = +1 at column j, -1 at column i
  std::vector<Pair> pairs;

  [[nodiscard]] std::size_t rows() const noexcept { return pairs.size(); }
  [[nodiscard]] std::size_t receiver_count() const noexcept { return static_cast<std::size_t>(entries.cols()); }
};

inline DifferencingMatrix differencing_matrix(std::vector<Pair> pairs, std::size_t n) {
  DifferencingMatrix p;
  p.entries = Mat::Zero(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(n));
  for (std::size_t row = 0; row < pairs.size(); ++row) {
    const auto [i, j] = pairs[row];
    if (i >= n || j >= n || i == j) {
      throw ValidationError("invalid pair (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) + ") for " +
                            std::to_string(n) + " receivers");
    }
    p.entries(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = 1.0;
    p.entries(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(i)) = -1.0;
  }
  p.pairs = std::move(pairs);
  return p;
}

inline DifferencingMatrix build_differencing_matrix(const PairingScheme& pairing, std::size_t n) {
  return differencing_matrix(pairing.resolve(n), n);
}

// Per-receiver quantity (frequency shift d_i or time of arrival tau_i).
struct ShiftVector {
  Vec values;
};

struct MeasurementVector {
  MeasurementKind kind = MeasurementKind::fdoa;
  Vec values;
  DifferencingMatrix differencing;
  ModelKind model = ModelKind::exact;
  UnitConvention::Mode unit_mode = UnitConvention::Mode::scaled;

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
  [[nodiscard]] const std::vector<Pair>& pairs() const noexcept { return differencing.pairs; }
};

namespace detail {

inline void require_unit(const Vec& direction) {
  if (std::abs(direction.norm() - 1.0) > kUnitNormTolerance) {
    throw ValidationError("direction must be a unit vector (|u| = " + std::to_string(direction.norm()) + ")");
  }
}

// Unit vectors u_i = (x_i - x)/r_i and ranges r_i, computed relative to the
// centroid to keep cancellation small for large coordinates.
struct LineOfSight {
  Mat unit;  // N x D
  Vec range;
};

inline LineOfSight line_of_sight(const Scenario& s) {
  const Vec c = s.centroid();
  const Vec emitter = s.require_emitter().position - c;
  const Mat x = s.centered_positions();
  LineOfSight los{Mat(x.rows(), x.cols()), Vec(x.rows())};
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    const Vec diff = x.row(k).transpose() - emitter;
    const double r = diff.norm();
    if (!(r > 0.0)) throw ValidationError("coincident emitter/receiver (receiver " + std::to_string(k + 1) + ")");
    los.range(k) = r;
    los.unit.row(k) = (diff / r).transpose();
  }
  return los;
}

}  // namespace detail

namespace detail {

inline Vec scaled_frequency_shifts(const Scenario& s) {
  const auto los = line_of_sight(s);
  return (s.velocities().cwiseProduct(los.unit)).rowwise().sum();
}

inline double unit_factor(const UnitConvention& units, MeasurementKind kind) {
  return kind == MeasurementKind::fdoa ? units.fdoa_factor() : units.tdoa_factor();
}

}  // namespace detail

inline ShiftVector exact_frequency_shifts(const Scenario& s) {
  return {detail::scaled_frequency_shifts(s) * s.units.fdoa_factor()};
}

// d = -V u. Scaled units.
inline ShiftVector farfield_frequency_shifts(const Vec& direction, const Mat& velocities) {
  detail::require_unit(direction);
  if (velocities.cols() != direction.size()) throw ValidationError("velocity / direction dimension mismatch");
  return {-(velocities * direction)};
}

inline ShiftVector exact_toa(const Scenario& s) {
  return {detail::line_of_sight(s).range * s.units.tdoa_factor()};
}

// tau_i = range - x_i . u, with x_i taken as given (centre them for the model to hold).
inline ShiftVector farfield_toa(const Vec& direction, const Mat& positions, double range) {
  detail::require_unit(direction);
  if (positions.cols() != direction.size()) throw ValidationError("position / direction dimension mismatch");
  return {Vec::Constant(positions.rows(), range) - positions * direction};
}

// Far-field linear maps from the unit direction to the measurement vector in
// scaled units: -P V for FDOA and -P X (centroid-centred X) for TDOA.
inline Mat farfield_map(const Scenario& s, const DifferencingMatrix& p, MeasurementKind kind) {
  if (kind == MeasurementKind::fdoa) return -(p.entries * s.velocities());
  return -(p.entries * s.centered_positions());
}

// Far-field measurements for an arbitrary unit direction (relative to the
// receiver centroid). Needs no emitter.
inline MeasurementVector farfield_measurements(const Scenario& s, const Vec& direction, MeasurementKind kind) {
  detail::require_unit(direction);
  MeasurementVector m;
  m.kind = kind;
  m.model = ModelKind::far_field;
  m.unit_mode = s.units.mode;
  m.differencing = differencing_matrix(s.pairs(), s.receiver_count());
  m.values = farfield_map(s, m.differencing, kind) * direction;
  m.values *= detail::unit_factor(s.units, kind);
  return m;
}

inline MeasurementVector measure(const Scenario& s, MeasurementKind kind, ModelKind model) {
  if (model == ModelKind::far_field) return farfield_measurements(s, s.true_direction(), kind);

  MeasurementVector m;
  m.kind = kind;
  m.model = model;
  m.unit_mode = s.units.mode;
  m.differencing = differencing_matrix(s.pairs(), s.receiver_count());
  if (kind == MeasurementKind::fdoa) {
    m.values = m.differencing.entries * detail::scaled_frequency_shifts(s);
    m.values *= s.units.fdoa_factor();
    return m;
  }
  // r_j - r_i evaluated as (r_j^2 - r_i^2)/(r_j + r_i); equal to P * tau in exact
  // arithmetic but free of the cancellation between two large ranges.
  const auto los = detail::line_of_sight(s);
  const Mat x = s.centered_positions();
  const Vec emitter = s.require_emitter().position - s.centroid();
  m.values.resize(static_cast<Eigen::Index>(m.pairs().size()));
  for (std::size_t row = 0; row < m.pairs().size(); ++row) {
    const auto i = static_cast<Eigen::Index>(m.pairs()[row].i);
    const auto j = static_cast<Eigen::Index>(m.pairs()[row].j);
    const Vec xi = x.row(i).transpose();
    const Vec xj = x.row(j).transpose();
    const double num = (xj - xi).dot(xj + xi - 2.0 * emitter);
    m.values(static_cast<Eigen::Index>(row)) = num / (los.range(i) + los.range(j));
  }
  m.values *= s.units.tdoa_factor();
  return m;
}

// Covariance of the pair-difference noise implied by a noise model.
inline Mat noise_covariance(const NoiseModel& noise, const DifferencingMatrix& p) {
  const auto m = static_cast<Eigen::Index>(p.rows());
  switch (noise.kind) {
    case NoiseModel::Kind::none:
      return Mat::Zero(m, m);
    case NoiseModel::Kind::iid:
      return noise.sigma * noise.sigma * Mat::Identity(m, m);
    case NoiseModel::Kind::differenced:
      return noise.sigma * noise.sigma * (p.entries * p.entries.transpose());
    case NoiseModel::Kind::explicit_covariance:
      if (noise.covariance.rows() != m || noise.covariance.cols() != m) {
        throw ValidationError("explicit covariance is " + std::to_string(noise.covariance.rows()) + "x" +
                              std::to_string(noise.covariance.cols()) + ", expected " + std::to_string(m) + "x" +
                              std::to_string(m));
      }
      return noise.covariance;
  }
  return Mat::Zero(m, m);
}

struct NoisyMeasurement {
  MeasurementVector measurement;
  Mat covariance;  // Q actually used
};

// Adds zero-mean Gaussian noise drawn from noise.seed. Differenced noise is
// drawn per receiver and pushed through P, so it stays exact when P P^T is
// singular (all_pairs); explicit Q is applied through its Cholesky factor.
inline NoisyMeasurement add_noise(const MeasurementVector& m, const NoiseModel& noise) {
  NoisyMeasurement out{m, noise_covariance(noise, m.differencing)};
  if (noise.kind == NoiseModel::Kind::none) return out;
  if ((noise.kind == NoiseModel::Kind::iid || noise.kind == NoiseModel::Kind::differenced) && !(noise.sigma > 0.0)) {
    throw ValidationError("noise sigma must be > 0");
  }

  NormalSource normal(noise.seed);
  const auto rows = static_cast<Eigen::Index>(m.size());
  switch (noise.kind) {
    case NoiseModel::Kind::iid:
      for (Eigen::Index k = 0; k < rows; ++k) out.measurement.values(k) += noise.sigma * normal();
      break;
    case NoiseModel::Kind::differenced: {
      Vec per_receiver(static_cast<Eigen::Index>(m.differencing.receiver_count()));
      for (Eigen::Index k = 0; k < per_receiver.size(); ++k) per_receiver(k) = noise.sigma * normal();
      out.measurement.values += m.differencing.entries * per_receiver;
      break;
    }
    case NoiseModel::Kind::explicit_covariance: {
      const Eigen::LLT<Mat> llt(out.covariance);
      if (llt.info() != Eigen::Success) throw ValidationError("explicit covariance is not positive definite");
      Vec z(rows);
      for (Eigen::Index k = 0; k < rows; ++k) z(k) = normal();
      out.measurement.values += llt.matrixL() * z;
      break;
    }
    case NoiseModel::Kind::none:
      break;
  }
  return out;
}

// Feasible far-field FDOA locus in 2D: -P V (cos t_k, sin t_k) for
// t_k = 2 pi k / samples. Every point lies in range(-P V).
inline std::vector<Vec> fdoa_ellipse_locus(const Mat& velocities, const PairingScheme& pairing, std::size_t samples) {
  if (velocities.cols() != 2) throw ValidationError("ellipse locus requires 2D velocities");
  if (samples < 3) throw ValidationError("ellipse locus needs at least 3 samples");
  const auto p = build_differencing_matrix(pairing, static_cast<std::size_t>(velocities.rows()));
  const Mat system = -(p.entries * velocities);
  std::vector<Vec> out;
  out.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples);
    out.emplace_back(system * Eigen::Vector2d(std::cos(t), std::sin(t)));
  }
  return out;
}

// Rows of P * per_receiver that vanish identically: pairs whose receivers share
// a velocity (FDOA) or a position (TDOA).
inline std::vector<std::size_t> null_rows(const DifferencingMatrix& p, const Mat& per_receiver) {
  std::vector<std::size_t> out;
  const Mat rows = p.entries * per_receiver;
  for (Eigen::Index k = 0; k < rows.rows(); ++k) {
    if ((rows.row(k).array() == 0.0).all()) out.push_back(static_cast<std::size_t>(k));
  }
  return out;
}

}  // namespace fardoa
