#pragma once

// Seeded Monte-Carlo harness comparing the far-field DOA estimator against the
// AOA Cramer-Rao bound across noise levels.
//
// Each trial draws noise on top of EXACT-model measurements and estimates the
// direction with the far-field system, so the far-field truncation bias is
// part of what is measured. Trial seeds come from derive_seed(base, level,
// trial); results are stored by trial index and reduced in index order, so the
// output does not depend on the thread count.

#include "fardoa/crlb.hpp"
#include "fardoa/csv.hpp"
#include "fardoa/error.hpp"
#include "fardoa/estimator.hpp"
#include "fardoa/measurement.hpp"
#include "fardoa/random.hpp"
#include "fardoa/scenario.hpp"
#include "fardoa/version.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

namespace fardoa {

// Difference est - truth wrapped into (-pi, pi].
inline double angular_error(double theta_est, double theta_true) {
  double d = std::remainder(theta_est - theta_true, 2.0 * std::numbers::pi);
  if (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
  return d;
}

// Neumaier compensated sum.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct TrialConfig {
  Scenario scenario;
  SystemKind kind = SystemKind::fdoa;
  std::vector<double> noise_powers;  // sigma^2, strictly positive, ascending
  std::size_t trials_per_level = 1000;
  std::uint64_t base_seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct LevelResult {
  double noise_power = 0.0;
  double aoa_variance = 0.0;  // rad^2, about the circular mean
  double aoa_bias = 0.0;      // circular mean of the error, rad
  double mean_residual = 0.0;
  double crlb = 0.0;          // rad^2; NaN for stacked sweeps
  double efficiency = 0.0;    // crlb / aoa_variance
  std::size_t trials_used = 0;
  std::size_t trials_failed = 0;
};

struct SweepResult {
  double true_theta = 0.0;
  std::vector<LevelResult> levels;
};

// Noise model of one sweep level. The scenario's noise kind fixes the shape
// (differenced when it has none): sigma = sqrt(power) for iid and
// differenced, power * Q for an explicit covariance.
inline NoiseModel level_noise(const NoiseModel& shape, double noise_power) {
  NoiseModel n = shape;
  switch (shape.kind) {
    case NoiseModel::Kind::none:
      n.kind = NoiseModel::Kind::differenced;
      n.sigma = std::sqrt(noise_power);
      break;
    case NoiseModel::Kind::iid:
    case NoiseModel::Kind::differenced:
      n.sigma = std::sqrt(noise_power);
      break;
    case NoiseModel::Kind::explicit_covariance:
      n.covariance = noise_power * shape.covariance;
      break;
  }
  return n;
}

namespace detail {

inline void check_config(const TrialConfig& c) {
  require_valid(c.scenario);
  if (!c.scenario.emitter) throw ValidationError("sweep needs an emitter (field 'emitter.position')");
  if (c.scenario.dim != 2) throw ValidationError("sweep reports the 2D angle of arrival; scenario must be 2D");
  if (c.trials_per_level < 2) throw ValidationError("trials_per_level must be >= 2");
  if (c.noise_powers.empty()) throw ValidationError("noise_powers is empty");
  for (std::size_t k = 0; k < c.noise_powers.size(); ++k) {
    if (!(c.noise_powers[k] > 0.0) || !std::isfinite(c.noise_powers[k])) throw ValidationError("noise powers must be finite and > 0");
    if (k > 0 && !(c.noise_powers[k] > c.noise_powers[k - 1])) throw ValidationError("noise powers must be strictly ascending");
  }
}

struct TrialOutcome {
  double error = 0.0;
  double residual = 0.0;
  bool ok = false;
  std::exception_ptr fatal;
};

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t k = begin; k < end; ++k) fn(k);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

inline SweepResult run_sweep(const TrialConfig& config) {
  detail::check_config(config);
  const Scenario& s = config.scenario;

  SweepResult result;
  result.true_theta = aoa_from_direction(s.true_direction()).azimuth;

  const bool stacked = config.kind == SystemKind::stacked;
  const MeasurementKind single = config.kind == SystemKind::tdoa ? MeasurementKind::tdoa : MeasurementKind::fdoa;
  const MeasurementVector clean_fdoa = measure(s, MeasurementKind::fdoa, ModelKind::exact);
  const MeasurementVector clean_tdoa = measure(s, MeasurementKind::tdoa, ModelKind::exact);
  const MeasurementVector& clean = single == MeasurementKind::fdoa ? clean_fdoa : clean_tdoa;

  for (std::size_t level = 0; level < config.noise_powers.size(); ++level) {
    const double power = config.noise_powers[level];
    const NoiseModel noise = level_noise(s.noise, power);
    // Equal per-block sigma: both blocks carry the same noise shape at this level.
    const SystemMatrix sys = stacked ? build_system(s, config.kind, BlockNoise{std::sqrt(power), std::sqrt(power)})
                                     : build_system(s, config.kind);

    std::vector<detail::TrialOutcome> outcomes(config.trials_per_level);
    detail::parallel_for(config.trials_per_level, config.threads, [&](std::size_t trial) {
      NoiseModel n = noise;
      n.seed = derive_seed(config.base_seed, level, trial);
      auto& out = outcomes[trial];
      try {
        DoaEstimate est;
        if (stacked) {
          NoiseModel nt = n;
          nt.seed = mix64(n.seed);
          est = estimate_doa(sys, add_noise(clean_fdoa, n).measurement, add_noise(clean_tdoa, nt).measurement);
        } else {
          est = estimate_doa(sys, add_noise(clean, n).measurement);
        }
        out.error = angular_error(est.aoa.azimuth, result.true_theta);
        out.residual = est.residual_norm;
        out.ok = true;
      } catch (const NumericalError&) {
        out.ok = false;
      } catch (...) {
        out.fatal = std::current_exception();
      }
    });
    for (const auto& o : outcomes) {
      if (o.fatal) std::rethrow_exception(o.fatal);
    }

    LevelResult r;
    r.noise_power = power;
    CompensatedSum sin_sum, cos_sum, residual_sum;
    for (const auto& o : outcomes) {
      if (!o.ok) {
        ++r.trials_failed;
        continue;
      }
      ++r.trials_used;
      sin_sum.add(std::sin(o.error));
      cos_sum.add(std::cos(o.error));
      residual_sum.add(o.residual);
    }
    if (2 * r.trials_failed > config.trials_per_level) {
      throw NumericalError("more than half of the trials failed at noise power " + csv::number(power));
    }
    if (r.trials_used < 2) throw NumericalError("fewer than 2 successful trials at noise power " + csv::number(power));

    r.aoa_bias = std::atan2(sin_sum.value(), cos_sum.value());
    CompensatedSum sq;
    for (const auto& o : outcomes) {
      if (o.ok) {
        const double d = angular_error(o.error, r.aoa_bias);
        sq.add(d * d);
      }
    }
    r.aoa_variance = sq.value() / static_cast<double>(r.trials_used - 1);
    r.mean_residual = residual_sum.value() / static_cast<double>(r.trials_used);

    if (stacked) {
      r.crlb = std::numeric_limits<double>::quiet_NaN();
    } else {
      const Mat q = noise_covariance(noise, clean.differencing);
      r.crlb = aoa_crlb(s, single, q).crlb_aoa_variance;
    }
    r.efficiency = r.crlb / r.aoa_variance;
    result.levels.push_back(r);
  }
  return result;
}

inline constexpr std::string_view kSweepHeader = "noise_power,estimator_variance,crlb,efficiency";

inline void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << kSweepHeader << '\n';
  for (const auto& l : result.levels) {
    out << csv::number(l.noise_power) << ',' << csv::number(l.aoa_variance) << ',' << csv::number(l.crlb) << ','
        << csv::number(l.efficiency) << '\n';
  }
}

inline void emit_fig2_data(const SweepResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_sweep_csv(out, result);
  if (!out) throw IoError("write failed for '" + path + "'");
}

// CRLB-only sweep: noise_power,crlb_var_rad2.
inline void write_crlb_sweep(std::ostream& out, const Scenario& s, MeasurementKind kind, const std::vector<double>& powers) {
  const auto p = differencing_matrix(s.pairs(), s.receiver_count());
  out << "noise_power,crlb_var_rad2\n";
  for (const double power : powers) {
    const Mat q = noise_covariance(level_noise(s.noise, power), p);
    out << csv::number(power) << ',' << csv::number(aoa_crlb(s, kind, q).crlb_aoa_variance) << '\n';
  }
}

struct ManifestEntry {
  std::string key;
  std::string value;
};

// key=value lines.
inline void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest '" + path + "'");
  for (const auto& e : entries) out << e.key << '=' << e.value << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::vector<ManifestEntry> sweep_manifest(const TrialConfig& c, const std::string& config_path,
                                                 const std::string& command_line) {
  std::string powers;
  for (std::size_t k = 0; k < c.noise_powers.size(); ++k) powers += (k ? "," : "") + csv::number(c.noise_powers[k]);
  return {{"config", config_path},
          {"seed", std::to_string(c.base_seed)},
          {"kind", std::string(to_string(c.kind))},
          {"trials_per_level", std::to_string(c.trials_per_level)},
          {"noise_powers", powers},
          {"command", command_line},
          {"version", std::string(kVersion)}};
}

}  // namespace fardoa
