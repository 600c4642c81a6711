// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Each check times itself; the runtime budget is part of the verdict.

#include "support.hpp"

#include "fardoa/fardoa.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace fardoa;
using testing::Rng;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

std::string scenario_path(const char* name) { return std::string(FARDOA_SCENARIO_DIR) + "/" + name; }

double angle_between(const Vec& a, const Vec& b) {
  return 2.0 * std::asin(std::min(1.0, (a.normalized() - b.normalized()).norm() / 2.0));
}

// 1. exact vs far-field gap shrinks as 1/range, FDOA and TDOA.
Outcome far_field_order() {
  Scenario s;
  s.dim = 2;
  s.receivers = {{Eigen::Vector2d(1.0, 0.2), Eigen::Vector2d(0.3, 1.0)},
                 {Eigen::Vector2d(-0.4, 0.9), Eigen::Vector2d(-0.8, 0.1)},
                 {Eigen::Vector2d(-0.9, -0.6), Eigen::Vector2d(0.5, -0.6)},
                 {Eigen::Vector2d(0.3, -0.5), Eigen::Vector2d(0.2, 0.4)}};
  const Vec c = s.centroid();
  const double radius = s.centered_positions().rowwise().norm().maxCoeff();
  const Vec u = Eigen::Vector2d(std::cos(2.1), std::sin(2.1));

  std::vector<double> ranges, fdoa_gap, tdoa_gap;
  for (double k = 1e2; k <= 1e6 * 1.01; k *= 10) {
    s.emitter = Emitter{c + k * radius * u};
    ranges.push_back(k * radius);
    for (auto [kind, gap] : {std::pair{MeasurementKind::fdoa, &fdoa_gap}, std::pair{MeasurementKind::tdoa, &tdoa_gap}}) {
      const Vec diff = measure(s, kind, ModelKind::exact).values - measure(s, kind, ModelKind::far_field).values;
      gap->push_back(diff.norm());
    }
  }
  const double sf = testing::loglog_slope(ranges, fdoa_gap);
  const double st = testing::loglog_slope(ranges, tdoa_gap);
  return {std::abs(sf + 1.0) <= 0.1 && std::abs(st + 1.0) <= 0.1, fmt("fdoa slope %.4f, tdoa slope %.4f", sf, st)};
}

// 2. far-field data, 100 random geometries, N in 3..6, D in {2,3}.
Outcome noiseless_recovery() {
  Rng rng(2002);
  double worst = 0.0;
  int unobservable = 0;
  bool ok = true;
  for (int g = 0; g < 100; ++g) {
    const std::size_t n = 3 + static_cast<std::size_t>(g % 4);
    const std::size_t dim = 2 + static_cast<std::size_t>((g / 4) % 2);
    const auto s = testing::random_scenario(rng, n, dim, 1.0, 1e3, g % 3 == 0 ? PairingScheme::all() : PairingScheme::reference());
    const Vec u = rng.unit(static_cast<Eigen::Index>(dim));
    const auto f = farfield_measurements(s, u, MeasurementKind::fdoa);
    const auto t = farfield_measurements(s, u, MeasurementKind::tdoa);
    // Three receivers in 3D give at most two independent rows per kind: the
    // single-kind systems must refuse, and the stacked system recovers u.
    const bool single_observable = n > dim;
    for (const auto* m : {&f, &t}) {
      const auto sys = build_system(s, system_kind(m->kind));
      try {
        const auto est = estimate_doa(sys, *m);
        if (!single_observable) ok = false;
        worst = std::max(worst, angle_between(est.direction, u));
      } catch (const UnobservableError&) {
        if (single_observable) ok = false;
        ++unobservable;
      }
    }
    worst = std::max(worst, angle_between(estimate_doa(build_system(s, SystemKind::stacked), f, t).direction, u));
  }
  ok = ok && worst <= 1e-9;
  return {ok, fmt("max angle error %.3e rad, %.0f rank-deficient single-kind systems flagged", worst, unobservable)};
}

// 3. 360 locus samples of the three-receiver scenario lie on the SVD ellipse.
Outcome ellipse_property() {
  const auto s = load_scenario(scenario_path("three_receiver_ellipse.json"));
  const auto locus = fdoa_ellipse_locus(s.velocities(), s.pairing, 360);
  const auto p = differencing_matrix(s.pairs(), s.receiver_count());
  const Mat a = -(p.entries * s.velocities());
  const Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU);
  const Mat uu = svd.matrixU();
  const Vec sigma = svd.singularValues();
  double off_range = 0.0, norm_dev = 0.0;
  for (const auto& v : locus) {
    off_range = std::max(off_range, (v - uu * (uu.transpose() * v)).norm());
    norm_dev = std::max(norm_dev, std::abs((uu.transpose() * v).cwiseQuotient(sigma).norm() - 1.0));
  }
  return {locus.size() == 360 && off_range <= 1e-9 && norm_dev <= 1e-9,
          fmt("%.0f samples, max off-range %.2e, max |norm - 1| %.2e", static_cast<double>(locus.size()), off_range, norm_dev)};
}

// 4. analytic Jacobians vs central differences on 100 geometries.
Outcome jacobian_oracles() {
  Rng rng(4004);
  double worst = 0.0;
  for (int g = 0; g < 100; ++g) {
    const std::size_t dim = 2 + static_cast<std::size_t>(g % 2);
    const auto s = testing::random_scenario(rng, 3 + static_cast<std::size_t>(g % 4), dim, 5.0, rng.uniform(5.0, 1e4));
    const Vec x = s.emitter->position;
    const Vec r = testing::ranges_at(s, x);
    const double h = 1e-6 * r.minCoeff();
    const Mat fd_shift = testing::central_jacobian([&](const Vec& y) { return testing::shifts_at(s, y); }, x, h);
    const Mat fd_toa = testing::central_jacobian([&](const Vec& y) { return testing::ranges_at(s, y); }, x, h);
    const Mat j_shift = frequency_shift_jacobian(s);
    const Mat j_toa = toa_jacobian(s);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double shift_scale = s.receivers[static_cast<std::size_t>(i)].velocity.norm() / r(i);
      worst = std::max(worst, (j_shift.row(i) - fd_shift.row(i)).norm() / shift_scale);
      worst = std::max(worst, (j_toa.row(i) - fd_toa.row(i)).norm());
    }
  }
  return {worst <= 1e-6, fmt("max relative row deviation %.3e", worst)};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 5. Monte-Carlo variance vs CRLB on the stand-in scenario.
Outcome sweep_trend() {
  TrialConfig c;
  c.scenario = load_scenario(scenario_path("crlb_standin.json"));
  c.kind = SystemKind::fdoa;
  c.noise_powers = {1e-8, 1e-7, 1e-6, 1e-5, 1e-4};
  c.trials_per_level = 2000;
  c.base_seed = c.scenario.noise.seed;

  const auto dir = std::filesystem::temp_directory_path();
  const std::string first = (dir / "fardoa_acceptance_sweep_1.csv").string();
  const std::string second = (dir / "fardoa_acceptance_sweep_2.csv").string();
  const auto result = run_sweep(c);
  emit_fig2_data(result, first);
  emit_fig2_data(run_sweep(c), second);
  const bool identical = slurp(first) == slurp(second) && !slurp(first).empty();
  std::filesystem::remove(first);
  std::filesystem::remove(second);

  bool dominance = true;
  double min_ratio = 1e300;
  std::vector<double> powers, variances, bounds;
  for (const auto& l : result.levels) {
    const double floor = l.crlb * (1.0 - 5.0 / std::sqrt(static_cast<double>(l.trials_used)));
    dominance = dominance && l.aoa_variance >= floor;
    min_ratio = std::min(min_ratio, l.aoa_variance / l.crlb);
    powers.push_back(l.noise_power);
    variances.push_back(l.aoa_variance);
    bounds.push_back(l.crlb);
  }
  const double slope = testing::loglog_slope(powers, variances);
  const double crlb_slope = testing::loglog_slope(powers, bounds);
  const bool trend = std::abs(slope - crlb_slope) <= 0.15;
  std::ostringstream d;
  d << "(a) min var/crlb " << fmt("%.4f", min_ratio) << (dominance ? " ok" : " LOW") << "; (b) slope "
    << fmt("%.4f vs crlb %.4f", slope, crlb_slope) << "; (c) rerun " << (identical ? "byte-identical" : "DIFFERS");
  return {dominance && trend && identical, d.str()};
}

// 6. denoised all-pairs measurements close every triangle.
Outcome denoise_consistency() {
  Rng rng(6006);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 4);
    const auto s = testing::random_scenario(rng, n, 2, 1.0, 1e3, PairingScheme::all());
    const auto kind = trial % 2 ? MeasurementKind::tdoa : MeasurementKind::fdoa;
    const auto noisy = add_noise(measure(s, kind, ModelKind::exact), {NoiseModel::Kind::iid, 0.1, {}, mix64(6006 + trial)}).measurement;
    const Vec f = denoise_measurements(noisy, build_system(s, system_kind(kind))).values;
    const auto& pairs = noisy.pairs();
    auto at = [&](std::size_t i, std::size_t j) {
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (pairs[k].i == i && pairs[k].j == j) return f(static_cast<Eigen::Index>(k));
      }
      return std::nan("");
    };
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) worst = std::max(worst, std::abs(at(i, j) + at(j, k) - at(i, k)));
  }
  return {worst <= 1e-10, fmt("max cycle defect %.3e", worst)};
}

// 7. triangulation: exact bearings, then 1e-3 rad bearing noise vs a grid oracle.
Outcome triangulation() {
  const Vec target = Eigen::Vector2d(3.0, 4.0);
  const std::vector<Vec> centers{Eigen::Vector2d(0, 0), Eigen::Vector2d(8, 0), Eigen::Vector2d(0, 9)};
  std::vector<Fix> exact;
  for (const auto& c : centers) exact.push_back({c, (target - c).normalized()});
  const double exact_err = (triangulate(exact).position - target).norm();

  Rng rng(7007);
  constexpr double kSpacing = 1e-3;
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Fix> noisy;
    for (const auto& c : centers) {
      const Vec d = target - c;
      const double a = std::atan2(d(1), d(0)) + 1e-3 * rng.normal();
      noisy.push_back({c, Eigen::Vector2d(std::cos(a), std::sin(a))});
    }
    const Vec oracle = testing::triangulation_grid(noisy, target, 0.05, kSpacing);
    worst = std::max(worst, (triangulate(noisy).position - oracle).cwiseAbs().maxCoeff());
  }
  return {exact_err <= 1e-9 && worst <= kSpacing, fmt("noiseless error %.3e, max gap to grid minimiser %.3e (spacing %.0e)",
                                                      exact_err, worst, kSpacing)};
}

// 8. QR vs normal equations on well-conditioned random systems.
Outcome solve_equivalence() {
  Rng rng(8008);
  double worst = 0.0, worst_cond = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto rows = static_cast<Eigen::Index>(rng.index(3, 12));
    const Eigen::Index cols = 2 + trial % 2;
    Mat a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = rng.normal();
    Vec b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) b(i) = rng.normal();
    const double cond = lstsq::spectrum(a).condition();
    if (!(cond < 1e6)) return {false, fmt("generated system with condition %.3e", cond)};
    worst_cond = std::max(worst_cond, cond);
    const Vec qr = lstsq::solve(a, b);
    worst = std::max(worst, (qr - lstsq::solve_normal_equations(a, b)).norm() / std::max(1.0, qr.norm()));
  }
  return {worst <= 1e-10, fmt("max deviation %.3e (largest condition %.1f)", worst, worst_cond)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "far-field model order", 1.0, far_field_order},
      {2, "noiseless recovery", 1.0, noiseless_recovery},
      {3, "ellipse locus", 0.1, ellipse_property},
      {4, "jacobian oracles", 1.0, jacobian_oracles},
      {5, "variance vs bound sweep", 60.0, sweep_trend},
      {6, "denoising consistency", 1.0, denoise_consistency},
      {7, "triangulation", 5.0, triangulation},
      {8, "solve equivalence", 1.0, solve_equivalence},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("criterion %d %-24s %s  %s; %.3f s (budget %.1f s)%s\n", c.id, c.name, pass ? "PASS" : "FAIL", o.detail.c_str(),
                secs, c.budget_s, in_time ? "" : " OVER BUDGET");
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
