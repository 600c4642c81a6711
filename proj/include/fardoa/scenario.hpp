#pragma once

// Geometric configuration of a passive localization problem: receivers with
// positions and velocities, an optional stationary emitter, the receiver
// pairing that defines which differences are measured, the noise model and
// the unit convention.
//
// Indices are 0-based in memory; the file format is 1-based (scenario_io.hpp).

#include "fardoa/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fardoa {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Receiver {
  Vec position;
  Vec velocity;
};

struct Emitter {
  Vec position;
};

// Ordered receiver pair. The measurement for (i, j) is "j minus i".
struct Pair {
  std::size_t i = 0;
  std::size_t j = 0;

  friend bool operator==(const Pair&, const Pair&) = default;
  friend auto operator<=>(const Pair&, const Pair&) = default;
};

struct PairingScheme {
  enum class Kind { reference, all_pairs, explicit_list };

  Kind kind = Kind::reference;
  std::size_t ref_index = 0;
  std::vector<Pair> pairs;

  static PairingScheme reference(std::size_t ref = 0) { return {Kind::reference, ref, {}}; }
  static PairingScheme all() { return {Kind::all_pairs, 0, {}}; }
  static PairingScheme explicit_pairs(std::vector<Pair> p) { return {Kind::explicit_list, 0, std::move(p)}; }

  // Expands the scheme into its ordered pair list for n receivers.
  // reference(r): (r, k) for every k != r in increasing k.
  // all_pairs:    (i, j), i < j, lexicographic.
  [[nodiscard]] std::vector<Pair> resolve(std::size_t n) const {
    std::vector<Pair> out;
    switch (kind) {
      case Kind::reference:
        if (ref_index >= n) {
          throw ValidationError("pairing reference index " + std::to_string(ref_index + 1) +
                                " out of range [1, " + std::to_string(n) + "]");
        }
        for (std::size_t k = 0; k < n; ++k) {
          if (k != ref_index) out.push_back({ref_index, k});
        }
        break;
      case Kind::all_pairs:
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = i + 1; j < n; ++j) out.push_back({i, j});
        }
        break;
      case Kind::explicit_list: {
        std::set<Pair> seen;
        for (const auto& p : pairs) {
          const std::string label = "(" + std::to_string(p.i + 1) + ", " + std::to_string(p.j + 1) + ")";
          if (p.i >= n || p.j >= n) {
            throw ValidationError("pair " + label + " has an index out of range [1, " + std::to_string(n) + "]");
          }
          if (p.i == p.j) throw ValidationError("pair " + label + " pairs a receiver with itself");
          if (!seen.insert(p).second) throw ValidationError("pair " + label + " is repeated");
        }
        out = pairs;
        break;
      }
    }
    if (out.empty()) throw ValidationError("pairing produces no pairs");
    return out;
  }

  friend bool operator==(const PairingScheme&, const PairingScheme&) = default;
};

struct NoiseModel {
  // none: no perturbation.
  // iid: Q = sigma^2 I in measurement units.
  // differenced: per-receiver noise of std sigma pushed through P, Q = sigma^2 P P^T.
  // explicit_covariance: Q given directly.
  enum class Kind { none, iid, differenced, explicit_covariance };

  Kind kind = Kind::none;
  double sigma = 0.0;
  Mat covariance;
  std::uint64_t seed = 0;
};

struct UnitConvention {
  enum class Mode { scaled, physical };

  Mode mode = Mode::scaled;
  double f0 = 0.0;  // Hz, physical mode only
  double c = 0.0;   // propagation speed, physical mode only

  // Factor applied at the model boundary to the scaled FDOA value.
  [[nodiscard]] double fdoa_factor() const noexcept { return mode == Mode::physical ? f0 / c : 1.0; }
  // Factor applied at the model boundary to the scaled TDOA value.
  [[nodiscard]] double tdoa_factor() const noexcept { return mode == Mode::physical ? 1.0 / c : 1.0; }

  friend bool operator==(const UnitConvention&, const UnitConvention&) = default;
};

struct Scenario {
  std::size_t dim = 2;
  std::vector<Receiver> receivers;
  std::optional<Emitter> emitter;
  PairingScheme pairing;
  NoiseModel noise;
  UnitConvention units;

  [[nodiscard]] std::size_t receiver_count() const noexcept { return receivers.size(); }

  [[nodiscard]] std::vector<Pair> pairs() const { return pairing.resolve(receivers.size()); }

  // N x D matrices with one receiver per row.
  [[nodiscard]] Mat positions() const {
    Mat out(static_cast<Eigen::Index>(receivers.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < receivers.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = receivers[k].position.transpose();
    return out;
  }

  [[nodiscard]] Mat velocities() const {
    Mat out(static_cast<Eigen::Index>(receivers.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < receivers.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = receivers[k].velocity.transpose();
    return out;
  }

  [[nodiscard]] Vec centroid() const { return positions().colwise().mean().transpose(); }

  // Receiver positions with the centroid subtracted.
  [[nodiscard]] Mat centered_positions() const {
    Mat x = positions();
    x.rowwise() -= x.colwise().mean();
    return x;
  }

  [[nodiscard]] const Emitter& require_emitter() const {
    if (!emitter) throw ValidationError("scenario has no emitter (field 'emitter.position' is required)");
    return *emitter;
  }

  // Distance from the receiver centroid to the emitter.
  [[nodiscard]] double emitter_range() const { return (require_emitter().position - centroid()).norm(); }

  // Ground-truth DOA: unit vector from the receiver centroid to the emitter.
  [[nodiscard]] Vec true_direction() const {
    const Vec rel = require_emitter().position - centroid();
    const double r = rel.norm();
    if (!(r > 0.0)) throw ValidationError("emitter coincides with the receiver centroid; direction undefined");
    return rel / r;
  }

  // q = max_i |x_i - centroid| / |x_emitter - centroid|. Far-field models hold for q << 1.
  [[nodiscard]] std::optional<double> far_field_quality() const {
    if (!emitter || receivers.empty()) return std::nullopt;
    const double radius = centered_positions().rowwise().norm().maxCoeff();
    return radius / emitter_range();
  }
};

namespace detail {

inline bool same(const Vec& a, const Vec& b) { return a.size() == b.size() && (a.array() == b.array()).all(); }

inline bool same(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace detail

inline bool operator==(const Receiver& a, const Receiver& b) {
  return detail::same(a.position, b.position) && detail::same(a.velocity, b.velocity);
}

inline bool operator==(const Emitter& a, const Emitter& b) { return detail::same(a.position, b.position); }

inline bool operator==(const NoiseModel& a, const NoiseModel& b) {
  return a.kind == b.kind && a.sigma == b.sigma && detail::same(a.covariance, b.covariance) && a.seed == b.seed;
}

inline bool operator==(const Scenario& a, const Scenario& b) {
  return a.dim == b.dim && a.receivers == b.receivers && a.emitter == b.emitter && a.pairing == b.pairing &&
         a.noise == b.noise && a.units == b.units;
}

struct Diagnostic {
  enum class Severity { error, warning };

  Severity severity;
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

inline constexpr double kFarFieldWarnThreshold = 0.1;

// Symmetric within 1e-12 relative and smallest eigenvalue > 1e-12 * largest.
inline bool is_spd(const Mat& q, double rel_tol = 1e-12) {
  if (q.rows() == 0 || q.rows() != q.cols() || !q.allFinite()) return false;
  const double scale = q.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return false;
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > rel_tol * scale) return false;
  const Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (q + q.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > rel_tol * eig.eigenvalues().cwiseAbs().maxCoeff();
}

// Checks every scenario invariant. Errors make the scenario unusable; warnings
// flag geometries where the far-field model or an FDOA row degrades.
inline std::vector<Diagnostic> validate(const Scenario& s) {
  std::vector<Diagnostic> out;
  auto error = [&](std::string msg) { out.push_back({Diagnostic::Severity::error, std::move(msg)}); };
  auto warning = [&](std::string msg) { out.push_back({Diagnostic::Severity::warning, std::move(msg)}); };
  const auto dim = static_cast<Eigen::Index>(s.dim);

  if (s.dim != 2 && s.dim != 3) error("dim must be 2 or 3, got " + std::to_string(s.dim));
  if (s.receivers.size() < 2) error("need at least 2 receivers, got " + std::to_string(s.receivers.size()));

  bool geometry_ok = s.dim == 2 || s.dim == 3;
  for (std::size_t k = 0; k < s.receivers.size(); ++k) {
    const auto& r = s.receivers[k];
    const std::string label = "receiver " + std::to_string(k + 1);
    if (r.position.size() != dim || r.velocity.size() != dim) {
      error(label + ": dimension mismatch (position " + std::to_string(r.position.size()) + ", velocity " +
            std::to_string(r.velocity.size()) + ", dim " + std::to_string(s.dim) + ")");
      geometry_ok = false;
    } else if (!r.position.allFinite() || !r.velocity.allFinite()) {
      error(label + ": non-finite component");
      geometry_ok = false;
    }
  }

  if (s.emitter) {
    const Vec& e = s.emitter->position;
    if (e.size() != dim) {
      error("emitter: dimension mismatch (" + std::to_string(e.size()) + " vs dim " + std::to_string(s.dim) + ")");
      geometry_ok = false;
    } else if (!e.allFinite()) {
      error("emitter: non-finite component");
      geometry_ok = false;
    } else if (geometry_ok) {
      for (std::size_t k = 0; k < s.receivers.size(); ++k) {
        if (!((s.receivers[k].position - e).norm() > 0.0)) {
          error("emitter coincident with receiver " + std::to_string(k + 1));
        }
      }
    }
  }

  std::optional<std::size_t> pair_count;
  try {
    if (!s.receivers.empty()) pair_count = s.pairing.resolve(s.receivers.size()).size();
  } catch (const ValidationError& e) {
    error(std::string("pairing: ") + e.what());
  }

  const auto& n = s.noise;
  if (!(n.sigma >= 0.0) || !std::isfinite(n.sigma)) error("noise: sigma must be finite and >= 0");
  if ((n.kind == NoiseModel::Kind::iid || n.kind == NoiseModel::Kind::differenced) && !(n.sigma > 0.0)) {
    warning("noise: sigma is 0, measurements will be noiseless");
  }
  if (n.kind == NoiseModel::Kind::explicit_covariance) {
    if (pair_count && n.covariance.rows() != static_cast<Eigen::Index>(*pair_count)) {
      error("noise: covariance Q must be " + std::to_string(*pair_count) + "x" + std::to_string(*pair_count) +
            ", got " + std::to_string(n.covariance.rows()) + "x" + std::to_string(n.covariance.cols()));
    } else if (!is_spd(n.covariance)) {
      error("noise: covariance Q is not symmetric positive definite");
    }
  }

  if (s.units.mode == UnitConvention::Mode::physical) {
    if (!(s.units.f0 > 0.0) || !std::isfinite(s.units.f0)) error("units: f0 must be > 0 in physical mode");
    if (!(s.units.c > 0.0) || !std::isfinite(s.units.c)) error("units: c must be > 0 in physical mode");
  }

  if (geometry_ok && s.receivers.size() >= 2) {
    for (std::size_t i = 0; i < s.receivers.size(); ++i) {
      for (std::size_t j = i + 1; j < s.receivers.size(); ++j) {
        if (detail::same(s.receivers[i].velocity, s.receivers[j].velocity)) {
          warning("receivers " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                  " have identical velocities: FDOA row will be null after differencing");
        }
      }
    }
    if (s.emitter && s.emitter->position.size() == dim && s.emitter->position.allFinite()) {
      if (const auto q = s.far_field_quality(); q && *q > kFarFieldWarnThreshold) {
        std::ostringstream msg;
        msg << "far-field quality factor q = " << *q << " exceeds " << kFarFieldWarnThreshold;
        warning(msg.str());
      }
    }
  }
  return out;
}

inline bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(),
                     [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::error; });
}

// Throws ValidationError listing every error diagnostic.
inline void require_valid(const Scenario& s) {
  const auto diags = validate(s);
  if (!has_errors(diags)) return;
  std::string msg = "invalid scenario:";
  for (const auto& d : diags) {
    if (d.severity == Diagnostic::Severity::error) msg += "\n  " + d.message;
  }
  throw ValidationError(msg);
}

}  // namespace fardoa
