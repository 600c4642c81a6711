#pragma once

// Shared generators and independent oracles for the unit and acceptance
// suites. Nothing here calls into the code paths it is used to check: the
// oracles differentiate, enumerate or factorise on their own.

#include "fardoa/fardoa.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace fardoa::testing {

// Portable uniform/normal draws (std distributions are implementation defined).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed), normal_(mix64(seed)) {}

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
  }
  double normal() { return normal_(); }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return lo + static_cast<std::size_t>(engine_() % (hi - lo + 1));
  }

  Vec unit(Eigen::Index dim) {
    Vec v(dim);
    do {
      for (Eigen::Index k = 0; k < dim; ++k) v(k) = normal();
    } while (v.norm() < 1e-3);
    return v / v.norm();
  }

  Vec vec(Eigen::Index dim, double lo, double hi) {
    Vec v(dim);
    for (Eigen::Index k = 0; k < dim; ++k) v(k) = uniform(lo, hi);
    return v;
  }

private:
  std::mt19937_64 engine_;
  NormalSource normal_;
};

// n receivers in a box of half-width `aperture`, random velocities, emitter at
// `range` from the centroid along a random direction.
inline Scenario random_scenario(Rng& rng, std::size_t n, std::size_t dim, double aperture, double range,
                                PairingScheme pairing = PairingScheme::reference()) {
  Scenario s;
  s.dim = dim;
  const auto d = static_cast<Eigen::Index>(dim);
  for (std::size_t k = 0; k < n; ++k) s.receivers.push_back({rng.vec(d, -aperture, aperture), rng.vec(d, -1.0, 1.0)});
  s.pairing = std::move(pairing);
  s.emitter = Emitter{s.centroid() + range * rng.unit(d)};
  return s;
}

inline Mat rotation2(double angle) {
  Mat r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

inline Mat random_rotation(Rng& rng, Eigen::Index dim) {
  Mat g(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

inline Scenario rotated(const Scenario& s, const Mat& r) {
  Scenario out = s;
  for (auto& rec : out.receivers) {
    rec.position = r * rec.position;
    rec.velocity = r * rec.velocity;
  }
  if (out.emitter) out.emitter->position = r * out.emitter->position;
  return out;
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lx = std::log(x[k]);
    const double ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// --- Finite-difference oracles ------------------------------------------------

// Central-difference Jacobian of fn at x.
inline Mat central_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& x, double step) {
  const Vec f0 = fn(x);
  Mat out(f0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vec xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    out.col(k) = (fn(xp) - fn(xm)) / (2.0 * step);
  }
  return out;
}

// Range rate of receiver i: d/dt |x_i + t v_i - x| at t = 0, by central differences.
inline double range_rate_fd(const Vec& xi, const Vec& vi, const Vec& x, double step) {
  const double rp = (xi + step * vi - x).norm();
  const double rm = (xi - step * vi - x).norm();
  return (rp - rm) / (2.0 * step);
}

// Per-receiver exact shifts and ranges as a function of the emitter position,
// evaluated from first principles (no centroid shift).
inline Vec shifts_at(const Scenario& s, const Vec& x) {
  Vec d(static_cast<Eigen::Index>(s.receivers.size()));
  for (std::size_t k = 0; k < s.receivers.size(); ++k) {
    const Vec diff = s.receivers[k].position - x;
    d(static_cast<Eigen::Index>(k)) = s.receivers[k].velocity.dot(diff) / diff.norm();
  }
  return d;
}

inline Vec ranges_at(const Scenario& s, const Vec& x) {
  Vec r(static_cast<Eigen::Index>(s.receivers.size()));
  for (std::size_t k = 0; k < s.receivers.size(); ++k) r(static_cast<Eigen::Index>(k)) = (s.receivers[k].position - x).norm();
  return r;
}

// Fisher information for the bearing computed by differencing the full exact
// FDOA (or TDOA) measurement map along theta, with Q inverted explicitly.
inline double fisher_by_composition(const Scenario& s, MeasurementKind kind, const Mat& q, double step = 1e-5) {
  const Vec c = s.centroid();
  const Vec rel = s.emitter->position - c;
  const double range = rel.norm();
  const double theta = std::atan2(rel(1), rel(0));
  auto at = [&](double t) {
    Scenario moved = s;
    moved.emitter->position = c + range * Eigen::Vector2d(std::cos(t), std::sin(t));
    return measure(moved, kind, ModelKind::exact).values;
  };
  const Vec g = (at(theta + step) - at(theta - step)) / (2.0 * step);
  return g.dot(q.inverse() * g);
}

// --- Least-squares oracles ----------------------------------------------------

// Brute-force minimiser of |a z - b|: grid search on a box that shrinks around
// the best point each round.
inline Vec grid_minimize(const Mat& a, const Vec& b, double half_width, int rounds = 60, int points = 21) {
  const Eigen::Index d = a.cols();
  Vec center = Vec::Zero(d);
  double h = half_width;
  auto cost = [&](const Vec& z) { return (a * z - b).squaredNorm(); };
  for (int round = 0; round < rounds; ++round) {
    Vec best = center;
    double best_cost = cost(center);
    const Eigen::Index total = static_cast<Eigen::Index>(std::pow(points, d));
    for (Eigen::Index idx = 0; idx < total; ++idx) {
      Vec z(d);
      Eigen::Index rem = idx;
      for (Eigen::Index k = 0; k < d; ++k) {
        const auto step = rem % points;
        rem /= points;
        z(k) = center(k) + h * (2.0 * static_cast<double>(step) / (points - 1) - 1.0);
      }
      const double c = cost(z);
      if (c < best_cost) {
        best_cost = c;
        best = z;
      }
    }
    center = best;
    h *= 0.5;
  }
  return center;
}

using Big = boost::multiprecision::cpp_bin_float_50;

// Normal equations solved in 50-digit arithmetic by Gaussian elimination.
inline Vec extended_precision_lstsq(const Mat& a, const Vec& b) {
  const Eigen::Index d = a.cols();
  std::vector<std::vector<Big>> g(static_cast<std::size_t>(d), std::vector<Big>(static_cast<std::size_t>(d + 1), Big(0)));
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      Big acc = 0;
      for (Eigen::Index r = 0; r < a.rows(); ++r) acc += Big(a(r, i)) * Big(a(r, j));
      g[i][j] = acc;
    }
    Big acc = 0;
    for (Eigen::Index r = 0; r < a.rows(); ++r) acc += Big(a(r, i)) * Big(b(r));
    g[i][d] = acc;
  }
  for (Eigen::Index col = 0; col < d; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index r = col + 1; r < d; ++r) {
      if (abs(g[r][col]) > abs(g[pivot][col])) pivot = r;
    }
    std::swap(g[col], g[pivot]);
    for (Eigen::Index r = 0; r < d; ++r) {
      if (r == col) continue;
      const Big f = g[r][col] / g[col][col];
      for (Eigen::Index k = col; k <= d; ++k) g[r][k] -= f * g[col][k];
    }
  }
  Vec out(d);
  for (Eigen::Index k = 0; k < d; ++k) out(k) = static_cast<double>(g[k][d] / g[k][k]);
  return out;
}

// Singular values from the eigenvalues of a^T a (tridiagonal QR, a different
// algorithm from the one-sided Jacobi SVD used by the library).
inline Vec singular_values_via_gram(const Mat& a) {
  const Eigen::SelfAdjointEigenSolver<Mat> eig(a.transpose() * a, Eigen::EigenvaluesOnly);
  Vec ev = eig.eigenvalues().reverse();
  return ev.cwiseMax(0.0).cwiseSqrt();
}

// --- Triangulation oracle -----------------------------------------------------

// Minimiser of sum_k |perp distance to line k|^2 over a square lattice.
inline Vec triangulation_grid(const std::vector<Fix>& fixes, const Vec& around, double half_width, double spacing) {
  const int steps = static_cast<int>(std::round(half_width / spacing));
  Vec best = around;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int ix = -steps; ix <= steps; ++ix) {
    for (int iy = -steps; iy <= steps; ++iy) {
      const Vec p = around + spacing * Eigen::Vector2d(ix, iy);
      double cost = 0.0;
      for (const auto& f : fixes) {
        const Vec u = f.direction.normalized();
        const Vec off = p - f.center;
        // perpendicular distance via the 2D cross product
        const double cross = off(0) * u(1) - off(1) * u(0);
        cost += cross * cross;
      }
      if (cost < best_cost) {
        best_cost = cost;
        best = p;
      }
    }
  }
  return best;
}

}  // namespace fardoa::testing
