#pragma once

// CSV formats shared by the CLI and the sweep harness. Numbers go through
// std::to_chars, so files are locale independent and round-trip doubles
// exactly.
//
//   measurements   pair_i,pair_j,kind,model,value,unit_mode   (1-based pairs)
//   estimate       kind,theta_rad,dir_x,dir_y[,dir_z],residual,raw_norm,cond
//   fixes          cx,cy[,cz],dx,dy[,dz]                      (header optional)
//   triangulation  x,y[,z],residual
//   crlb sweep     noise_power,crlb_var_rad2

#include "fardoa/error.hpp"
#include "fardoa/estimator.hpp"
#include "fardoa/measurement.hpp"

#include <charconv>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace fardoa::csv {

// Shortest text that parses back to the same double; locale independent.
inline std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  for (auto& field : out) {
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    field = first == std::string::npos ? std::string() : field.substr(first, last - first + 1);
  }
  return out;
}

inline std::optional<double> try_parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return v;
}

inline double parse_double(std::string_view text, std::size_t line, const std::string& field) {
  const auto v = try_parse_double(text);
  if (!v) throw ParseError("not a number: '" + std::string(text) + "'", line, field);
  return *v;
}

inline std::size_t parse_index(std::string_view text, std::size_t line, const std::string& field) {
  std::size_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty() || v < 1) {
    throw ParseError("expected a 1-based index, got '" + std::string(text) + "'", line, field);
  }
  return v - 1;
}

inline constexpr std::string_view kMeasurementHeader = "pair_i,pair_j,kind,model,value,unit_mode";

inline void write_measurements(std::ostream& out, const MeasurementVector& m) {
  out << kMeasurementHeader << '\n';
  for (std::size_t k = 0; k < m.size(); ++k) {
    const auto& p = m.pairs()[k];
    out << p.i + 1 << ',' << p.j + 1 << ',' << to_string(m.kind) << ',' << to_string(m.model) << ','
        << number(m.values(static_cast<Eigen::Index>(k))) << ',' << to_string(m.unit_mode) << '\n';
  }
}

// Reads one measurement vector; all rows must share kind, model and unit mode.
inline MeasurementVector read_measurements(std::istream& in, std::size_t receiver_count) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    have_header = line.find_first_not_of(" \t\r") != std::string::npos;
  }
  if (!have_header || split(line) != split(std::string(kMeasurementHeader))) {
    throw ParseError("expected header '" + std::string(kMeasurementHeader) + "'", line_no);
  }

  MeasurementVector m;
  std::vector<Pair> pairs;
  std::vector<double> values;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split(line);
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 6) throw ParseError("expected 6 fields, got " + std::to_string(fields.size()), line_no);

    const Pair p{parse_index(fields[0], line_no, "pair_i"), parse_index(fields[1], line_no, "pair_j")};
    MeasurementKind kind{};
    if (fields[2] == "fdoa") {
      kind = MeasurementKind::fdoa;
    } else if (fields[2] == "tdoa") {
      kind = MeasurementKind::tdoa;
    } else {
      throw ParseError("unknown kind '" + fields[2] + "'", line_no, "kind");
    }
    ModelKind model{};
    if (fields[3] == "exact") {
      model = ModelKind::exact;
    } else if (fields[3] == "far_field") {
      model = ModelKind::far_field;
    } else {
      throw ParseError("unknown model '" + fields[3] + "'", line_no, "model");
    }
    UnitConvention::Mode mode{};
    if (fields[5] == "scaled") {
      mode = UnitConvention::Mode::scaled;
    } else if (fields[5] == "physical") {
      mode = UnitConvention::Mode::physical;
    } else {
      throw ParseError("unknown unit mode '" + fields[5] + "'", line_no, "unit_mode");
    }
    if (first) {
      m.kind = kind;
      m.model = model;
      m.unit_mode = mode;
      first = false;
    } else if (kind != m.kind || model != m.model || mode != m.unit_mode) {
      throw ParseError("mixed kind/model/unit_mode in one measurement file", line_no);
    }
    if (p.i >= receiver_count || p.j >= receiver_count) {
      throw ParseError("pair index exceeds receiver count " + std::to_string(receiver_count), line_no);
    }
    pairs.push_back(p);
    values.push_back(parse_double(fields[4], line_no, "value"));
  }
  if (pairs.empty()) throw ParseError("no measurement rows", line_no);

  try {
    m.differencing = differencing_matrix(std::move(pairs), receiver_count);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), 0);
  }
  m.values = Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
  return m;
}

inline void write_estimate(std::ostream& out, SystemKind kind, const DoaEstimate& est) {
  static constexpr const char* axes[] = {"x", "y", "z"};
  out << "kind,theta_rad";
  for (Eigen::Index k = 0; k < est.direction.size(); ++k) out << ",dir_" << axes[k];
  out << ",residual,raw_norm,cond\n";
  out << to_string(kind) << ',' << number(est.aoa.azimuth);
  for (Eigen::Index k = 0; k < est.direction.size(); ++k) out << ',' << number(est.direction(k));
  out << ',' << number(est.residual_norm) << ',' << number(est.raw_solution.norm()) << ','
      << number(est.condition_number) << '\n';
}

inline std::vector<Fix> read_fixes(std::istream& in) {
  std::vector<Fix> fixes;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> columns;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split(line);
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fixes.empty() && !columns && !try_parse_double(fields[0])) {
      columns = fields.size();  // header
      continue;
    }
    if (fields.size() != 4 && fields.size() != 6) {
      throw ParseError("expected 4 (2D) or 6 (3D) fields, got " + std::to_string(fields.size()), line_no);
    }
    if (columns && *columns != fields.size()) throw ParseError("row width does not match header", line_no);
    columns = fields.size();
    const auto dim = static_cast<Eigen::Index>(fields.size() / 2);
    Fix fix{Vec(dim), Vec(dim)};
    for (Eigen::Index k = 0; k < dim; ++k) {
      fix.center(k) = parse_double(fields[static_cast<std::size_t>(k)], line_no, "c" + std::to_string(k));
      fix.direction(k) = parse_double(fields[static_cast<std::size_t>(dim + k)], line_no, "d" + std::to_string(k));
    }
    fixes.push_back(std::move(fix));
  }
  return fixes;
}

inline void write_fixes(std::ostream& out, const std::vector<Fix>& fixes) {
  if (fixes.empty()) return;
  const bool three = fixes.front().center.size() == 3;
  out << (three ? "cx,cy,cz,dx,dy,dz\n" : "cx,cy,dx,dy\n");
  for (const auto& f : fixes) {
    for (Eigen::Index k = 0; k < f.center.size(); ++k) out << number(f.center(k)) << ',';
    for (Eigen::Index k = 0; k < f.direction.size(); ++k) out << number(f.direction(k)) << (k + 1 < f.direction.size() ? "," : "\n");
  }
}

inline void write_triangulation(std::ostream& out, const Triangulation& t) {
  static constexpr const char* axes[] = {"x", "y", "z"};
  for (Eigen::Index k = 0; k < t.position.size(); ++k) out << axes[k] << ',';
  out << "residual\n";
  for (Eigen::Index k = 0; k < t.position.size(); ++k) out << number(t.position(k)) << ',';
  out << number(t.residual) << '\n';
}

}  // namespace fardoa::csv
