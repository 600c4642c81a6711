#pragma once

// fardoa command-line front end. run_cli() is the whole program; main.cpp only
// forwards argv so the tests can drive commands in-process.
//
// Exit codes: 0 success, 2 validation/usage, 3 I/O or parse, 4 numerical
// degeneracy. Data goes to --out or stdout; diagnostics go to stderr.

#include "fardoa/fardoa.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace fardoa::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kIo = 3, kNumerical = 4 };

inline constexpr const char* kSeedEnv = "FARDOA_SEED";

namespace detail {

inline Scenario load_checked(const std::string& path, std::ostream& err) {
  Scenario s = load_scenario(path);
  const auto diags = validate(s);
  for (const auto& d : diags) {
    if (d.severity == Diagnostic::Severity::warning) err << "warning: " << d.message << '\n';
  }
  require_valid(s);
  return s;
}

// Runs fn with the data stream: the --out file when given, stdout otherwise.
inline void with_output(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(out);
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write '" + path + "'");
  fn(file);
  if (!file) throw IoError("write failed for '" + path + "'");
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

inline ModelKind parse_model(const std::string& s) {
  return s == "exact" ? ModelKind::exact : ModelKind::far_field;
}

inline MeasurementKind parse_measurement_kind(const std::string& s) {
  return s == "fdoa" ? MeasurementKind::fdoa : MeasurementKind::tdoa;
}

inline SystemKind parse_system_kind(const std::string& s) {
  if (s == "fdoa") return SystemKind::fdoa;
  if (s == "tdoa") return SystemKind::tdoa;
  return SystemKind::stacked;
}

inline std::vector<double> parse_power_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& field : csv::split(text)) {
    if (field.empty()) continue;
    const auto v = csv::try_parse_double(field);
    if (!v) throw ValidationError("bad noise power '" + field + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw ValidationError("empty noise power list");
  return out;
}

inline std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv(kSeedEnv);
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const auto v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0') throw ValidationError(std::string(kSeedEnv) + " is not an unsigned integer");
  return static_cast<std::uint64_t>(v);
}

inline void print_angle(std::ostream& os, const DoaEstimate& est) {
  os << std::setprecision(10) << "theta = " << est.aoa.azimuth << " rad (" << est.aoa.azimuth * 180.0 / std::numbers::pi
     << " deg)";
  if (est.aoa.elevation) {
    os << ", elevation = " << *est.aoa.elevation << " rad (" << *est.aoa.elevation * 180.0 / std::numbers::pi << " deg)";
  }
  os << ", |raw| = " << est.raw_solution.norm() << ", cond = " << est.condition_number << '\n';
}

inline void report_null_rows(const Scenario& s, MeasurementKind kind, std::ostream& err) {
  const auto p = differencing_matrix(s.pairs(), s.receiver_count());
  const Mat per_receiver = kind == MeasurementKind::fdoa ? s.velocities() : s.positions();
  for (const auto row : null_rows(p, per_receiver)) {
    err << "warning: pair (" << p.pairs[row].i + 1 << ", " << p.pairs[row].j + 1 << ") gives a null "
        << to_string(kind) << " row\n";
  }
}

// Measurements for one kind: from a CSV when given, otherwise generated from the
// scenario (with the scenario's noise model applied).
inline MeasurementVector obtain_measurements(const Scenario& s, MeasurementKind kind, ModelKind model,
                                             const std::vector<std::string>& files) {
  for (const auto& f : files) {
    auto in = open_input(f);
    auto m = csv::read_measurements(in, s.receiver_count());
    if (m.kind == kind) return m;
  }
  if (!files.empty()) throw ValidationError("no " + std::string(to_string(kind)) + " measurement file given");
  auto m = measure(s, kind, model);
  const bool noisy = s.noise.kind == NoiseModel::Kind::explicit_covariance ||
                     (s.noise.kind != NoiseModel::Kind::none && s.noise.sigma > 0.0);
  if (noisy) {
    NoiseModel n = s.noise;
    if (kind == MeasurementKind::tdoa) n.seed = mix64(n.seed);
    m = add_noise(m, n).measurement;
  }
  return m;
}

}  // namespace detail

inline std::string join_args(const std::vector<std::string>& args) {
  std::string out;
  for (const auto& a : args) out += (out.empty() ? "" : " ") + a;
  return out;
}

// args excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Far-field DOA from TDOA/FDOA: measurement models, estimation, CRLB and Monte-Carlo sweeps", "fardoa"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(kVersion));

  std::function<void()> action;

  // validate
  std::string scenario_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file and report diagnostics");
  validate_cmd->add_option("scenario", scenario_path, "Scenario JSON")->required();
  validate_cmd->callback([&] {
    action = [&] {
      const Scenario s = load_scenario(scenario_path);
      const auto diags = validate(s);
      for (const auto& d : diags) {
        err << (d.severity == Diagnostic::Severity::error ? "error: " : "warning: ") << d.message << '\n';
      }
      if (has_errors(diags)) throw ValidationError("scenario has errors");
      out << "receivers=" << s.receiver_count() << '\n' << "dim=" << s.dim << '\n' << "pairs=" << s.pairs().size() << '\n';
      if (const auto q = s.far_field_quality()) out << "far_field_quality=" << csv::number(*q) << '\n';
    };
  });

  // measure
  std::string kind = "fdoa";
  std::string model = "exact";
  std::string out_path;
  std::optional<double> noise_override;
  std::optional<std::uint64_t> seed;
  auto* measure_cmd = app.add_subcommand("measure", "Generate TDOA/FDOA measurements");
  measure_cmd->add_option("scenario", scenario_path, "Scenario JSON")->required();
  measure_cmd->add_option("--kind", kind, "fdoa | tdoa")->check(CLI::IsMember({"fdoa", "tdoa"}));
  measure_cmd->add_option("--model", model, "exact | farfield")->check(CLI::IsMember({"exact", "farfield", "far_field"}));
  measure_cmd->add_option("--noise-override", noise_override, "Noise sigma replacing the scenario's (0 disables noise)");
  measure_cmd->add_option("--seed", seed, "Noise seed (default: $FARDOA_SEED, then the scenario seed)");
  measure_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
  measure_cmd->callback([&] {
    action = [&] {
      const Scenario s = detail::load_checked(scenario_path, err);
      if (const auto q = s.far_field_quality()) err << "far-field quality factor q = " << csv::number(*q) << '\n';
      const auto mk = detail::parse_measurement_kind(kind);
      detail::report_null_rows(s, mk, err);
      auto m = measure(s, mk, detail::parse_model(model));

      NoiseModel noise = s.noise;
      if (noise_override) {
        if (*noise_override < 0.0) throw ValidationError("--noise-override must be >= 0");
        if (*noise_override == 0.0) {
          noise.kind = NoiseModel::Kind::none;
        } else {
          if (noise.kind == NoiseModel::Kind::none || noise.kind == NoiseModel::Kind::explicit_covariance) {
            noise.kind = NoiseModel::Kind::differenced;
          }
          noise.sigma = *noise_override;
        }
      }
      if (seed) {
        noise.seed = *seed;
      } else if (const auto env = detail::env_seed()) {
        noise.seed = *env;
      }
      if (noise.kind != NoiseModel::Kind::none) m = add_noise(m, noise).measurement;
      detail::with_output(out_path, out, [&](std::ostream& os) { csv::write_measurements(os, m); });
    };
  });

  // estimate
  std::vector<std::string> measurement_files;
  std::string est_kind = "fdoa";
  std::string est_model = "farfield";
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate the direction of arrival");
  estimate_cmd->add_option("scenario", scenario_path, "Scenario JSON (receiver geometry)")->required();
  estimate_cmd->add_option("--measurements", measurement_files, "Measurement CSV (repeat for stacked)");
  estimate_cmd->add_option("--kind", est_kind, "fdoa | tdoa | stacked")->check(CLI::IsMember({"fdoa", "tdoa", "stacked"}));
  estimate_cmd->add_option("--model", est_model, "Model used when generating measurements internally")
      ->check(CLI::IsMember({"exact", "farfield", "far_field"}));
  estimate_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
  estimate_cmd->callback([&] {
    action = [&] {
      const Scenario s = detail::load_checked(scenario_path, err);
      const auto sk = detail::parse_system_kind(est_kind);
      const auto mdl = detail::parse_model(est_model);
      const SystemMatrix sys = build_system(s, sk);
      DoaEstimate est;
      if (sk == SystemKind::stacked) {
        const auto f = detail::obtain_measurements(s, MeasurementKind::fdoa, mdl, measurement_files);
        const auto t = detail::obtain_measurements(s, MeasurementKind::tdoa, mdl, measurement_files);
        est = estimate_doa(sys, f, t);
      } else {
        const auto mk = sk == SystemKind::fdoa ? MeasurementKind::fdoa : MeasurementKind::tdoa;
        est = estimate_doa(sys, detail::obtain_measurements(s, mk, mdl, measurement_files));
      }
      detail::with_output(out_path, out, [&](std::ostream& os) { csv::write_estimate(os, sk, est); });
      detail::print_angle(out_path.empty() ? err : out, est);
    };
  });

  // denoise
  auto* denoise_cmd = app.add_subcommand("denoise", "Project measurements onto the far-field feasible set");
  denoise_cmd->add_option("scenario", scenario_path, "Scenario JSON (receiver geometry)")->required();
  denoise_cmd->add_option("--measurements", measurement_files, "Measurement CSV")->expected(0, 1);
  denoise_cmd->add_option("--kind", kind, "fdoa | tdoa")->check(CLI::IsMember({"fdoa", "tdoa"}));
  denoise_cmd->add_option("--model", est_model, "Model used when generating measurements internally")
      ->check(CLI::IsMember({"exact", "farfield", "far_field"}));
  denoise_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
  denoise_cmd->callback([&] {
    action = [&] {
      const Scenario s = detail::load_checked(scenario_path, err);
      MeasurementKind mk = detail::parse_measurement_kind(kind);
      if (!measurement_files.empty()) {
        auto in = detail::open_input(measurement_files.front());
        mk = csv::read_measurements(in, s.receiver_count()).kind;
      }
      const auto m = detail::obtain_measurements(s, mk, detail::parse_model(est_model), measurement_files);
      const auto d = denoise_measurements(m, build_system(s, system_kind(mk)));
      err << "removed residual norm " << csv::number((m.values - d.values).norm()) << '\n';
      detail::with_output(out_path, out, [&](std::ostream& os) { csv::write_measurements(os, d); });
    };
  });

  // ellipse
  std::size_t samples = 360;
  auto* ellipse_cmd = app.add_subcommand("ellipse", "Sample the far-field FDOA feasible locus (2D)");
  ellipse_cmd->add_option("scenario", scenario_path, "Scenario JSON")->required();
  ellipse_cmd->add_option("--samples", samples, "Number of samples")->check(CLI::Range(std::size_t{3}, std::size_t{100000000}));
  ellipse_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
  ellipse_cmd->callback([&] {
    action = [&] {
      const Scenario s = detail::load_checked(scenario_path, err);
      if (s.dim != 2) throw ValidationError("ellipse locus requires a 2D scenario (dim = " + std::to_string(s.dim) + ")");
      const auto pairs = s.pairs();
      auto locus = fdoa_ellipse_locus(s.velocities(), s.pairing, samples);
      for (auto& v : locus) v *= s.units.fdoa_factor();
      detail::with_output(out_path, out, [&](std::ostream& os) {
        os << "theta_rad";
        for (const auto& p : pairs) os << ",f_" << p.i + 1 << '_' << p.j + 1;
        os << '\n';
        for (std::size_t k = 0; k < locus.size(); ++k) {
          os << csv::number(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples));
          for (Eigen::Index c = 0; c < locus[k].size(); ++c) os << ',' << csv::number(locus[k](c));
          os << '\n';
        }
      });
    };
  });

  // crlb
  std::string powers_text;
  auto* crlb_cmd = app.add_subcommand("crlb", "Cramer-Rao bound on the angle of arrival");
  crlb_cmd->add_option("scenario", scenario_path, "Scenario JSON")->required();
  crlb_cmd->add_option("--kind", kind, "fdoa | tdoa")->check(CLI::IsMember({"fdoa", "tdoa"}));
  crlb_cmd->add_option("--noise-powers", powers_text, "Comma-separated sigma^2 list (sweep mode)");
  crlb_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
  crlb_cmd->callback([&] {
    action = [&] {
      const Scenario s = detail::load_checked(scenario_path, err);
      const auto mk = detail::parse_measurement_kind(kind);
      if (!powers_text.empty()) {
        const auto powers = detail::parse_power_list(powers_text);
        detail::with_output(out_path, out, [&](std::ostream& os) { write_crlb_sweep(os, s, mk, powers); });
        return;
      }
      const auto p = differencing_matrix(s.pairs(), s.receiver_count());
      const auto report = aoa_crlb(s, mk, noise_covariance(s.noise, p));
      detail::with_output(out_path, out, [&](std::ostream& os) {
        os << "theta_rad,range,fisher_information,crlb_var_rad2\n"
           << csv::number(report.theta) << ',' << csv::number(report.range) << ','
           << csv::number(report.fisher_information) << ',' << csv::number(report.crlb_aoa_variance) << '\n';
      });
    };
  });

  // sweep
  std::size_t trials = 1000;
  std::string manifest_path;
  unsigned threads = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo estimator variance vs CRLB across noise powers");
  sweep_cmd->add_option("scenario", scenario_path, "Scenario JSON")->required();
  sweep_cmd->add_option("--noise-powers", powers_text, "Comma-separated sigma^2 list, ascending")->required();
  sweep_cmd->add_option("--trials", trials, "Trials per noise level")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seed", seed, "Base seed (default: $FARDOA_SEED, then the scenario seed)");
  sweep_cmd->add_option("--kind", est_kind, "fdoa | tdoa | stacked")->check(CLI::IsMember({"fdoa", "tdoa", "stacked"}));
  sweep_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  sweep_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
  sweep_cmd->add_option("--manifest", manifest_path, "Run manifest path (default <out>.manifest)");
  sweep_cmd->callback([&] {
    action = [&] {
      TrialConfig config;
      config.scenario = detail::load_checked(scenario_path, err);
      config.kind = detail::parse_system_kind(est_kind);
      config.noise_powers = detail::parse_power_list(powers_text);
      config.trials_per_level = trials;
      config.threads = threads;
      if (seed) {
        config.base_seed = *seed;
      } else if (const auto env = detail::env_seed()) {
        config.base_seed = *env;
      } else {
        config.base_seed = config.scenario.noise.seed;
      }
      const auto result = run_sweep(config);
      for (const auto& l : result.levels) {
        if (l.trials_failed > 0) {
          err << "warning: " << l.trials_failed << " failed trials at noise power " << csv::number(l.noise_power) << '\n';
        }
      }
      detail::with_output(out_path, out, [&](std::ostream& os) { write_sweep_csv(os, result); });
      const std::string manifest = !manifest_path.empty() ? manifest_path : (out_path.empty() ? "" : out_path + ".manifest");
      if (!manifest.empty()) write_manifest(manifest, sweep_manifest(config, scenario_path, "fardoa " + join_args(args)));
    };
  });

  // triangulate
  std::string fixes_path;
  auto* tri_cmd = app.add_subcommand("triangulate", "Locate the emitter from several DOA fixes");
  tri_cmd->add_option("--fixes", fixes_path, "Fix CSV: cx,cy(,cz),dx,dy(,dz)")->required();
  tri_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
  tri_cmd->callback([&] {
    action = [&] {
      auto in = detail::open_input(fixes_path);
      const auto fixes = csv::read_fixes(in);
      const auto result = triangulate(fixes);
      for (const auto k : result.inconsistent) {
        err << "warning: fix " << k + 1 << " points away from the solution\n";
      }
      detail::with_output(out_path, out, [&](std::ostream& os) { csv::write_triangulation(os, result); });
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  try {
    action();
    return kOk;
  } catch (const UnobservableError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  }
}

}  // namespace fardoa::cli
