#pragma once

// Scenario file format (JSON, UTF-8, strict: unknown fields are rejected).
//
//   {
//     "dim": 2 | 3,
//     "receivers": [ { "position": [..], "velocity": [..] }, .. ],
//     "emitter":   { "position": [..] },                       optional
//     "pairing":   { "kind": "reference" | "all_pairs" | "explicit",
//                    "ref_index": int, "pairs": [[i, j], ..] },
//     "noise":     { "kind": "none" | "iid" | "differenced" | "explicit",
//                    "sigma": float, "Q": [[..], ..], "seed": uint64 },
//     "units":     { "mode": "scaled" | "physical", "f0": float, "c": float }
//   }
//
// Indices are 1-based in the file. Pair (i, j) measures "j minus i".
// "pairing", "noise" and "units" are optional and default to reference(1),
// none and scaled.

#include "fardoa/error.hpp"
#include "fardoa/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <sstream>
#include <string>

namespace fardoa {

namespace detail {

using json = nlohmann::ordered_json;

inline void check_fields(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ParseError("expected an object", 0, path);
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) throw ParseError("unknown field '" + item.key() + "'", 0, path.empty() ? item.key() : path + "." + item.key());
  }
}

inline const json& require(const json& obj, const char* key, const std::string& path) {
  const std::string field = path.empty() ? std::string(key) : path + "." + key;
  if (!obj.contains(key)) throw ParseError("missing required field", 0, field);
  return obj.at(key);
}

inline double read_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError("expected a number", 0, path);
  return v.get<double>();
}

inline std::string read_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ParseError("expected a string", 0, path);
  return v.get<std::string>();
}

inline std::size_t read_index(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ParseError("expected an integer index", 0, path);
  const auto k = v.get<long long>();
  if (k < 1) throw ParseError("indices are 1-based, got " + std::to_string(k), 0, path);
  return static_cast<std::size_t>(k - 1);
}

inline Vec read_vector(const json& v, const std::string& path) {
  if (!v.is_array()) throw ParseError("expected an array of numbers", 0, path);
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = read_number(v[k], path + "[" + std::to_string(k) + "]");
  }
  return out;
}

inline Mat read_matrix(const json& v, const std::string& path) {
  if (!v.is_array()) throw ParseError("expected an array of rows", 0, path);
  const auto rows = static_cast<Eigen::Index>(v.size());
  Mat out(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const Vec row = read_vector(v[static_cast<std::size_t>(r)], rp);
    if (row.size() != rows) throw ParseError("covariance must be square", 0, rp);
    out.row(r) = row.transpose();
  }
  return out;
}

inline json write_vector(const Vec& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

inline std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  const auto end = text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size()));
  return 1 + static_cast<std::size_t>(std::count(text.begin(), end, '\n'));
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::ordered_json& doc) {
  using detail::json;
  detail::check_fields(doc, "", {"dim", "receivers", "emitter", "pairing", "noise", "units"});

  Scenario s;
  const json& dim = detail::require(doc, "dim", "");
  if (!dim.is_number_integer() || dim.get<long long>() < 0) throw ParseError("expected a non-negative integer", 0, "dim");
  s.dim = dim.get<std::size_t>();

  const json& receivers = detail::require(doc, "receivers", "");
  if (!receivers.is_array()) throw ParseError("expected an array", 0, "receivers");
  for (std::size_t k = 0; k < receivers.size(); ++k) {
    const std::string path = "receivers[" + std::to_string(k) + "]";
    detail::check_fields(receivers[k], path, {"position", "velocity"});
    Receiver r;
    r.position = detail::read_vector(detail::require(receivers[k], "position", path), path + ".position");
    r.velocity = detail::read_vector(detail::require(receivers[k], "velocity", path), path + ".velocity");
    s.receivers.push_back(std::move(r));
  }

  if (doc.contains("emitter")) {
    const json& e = doc.at("emitter");
    detail::check_fields(e, "emitter", {"position"});
    s.emitter = Emitter{detail::read_vector(detail::require(e, "position", "emitter"), "emitter.position")};
  }

  if (doc.contains("pairing")) {
    const json& p = doc.at("pairing");
    detail::check_fields(p, "pairing", {"kind", "ref_index", "pairs"});
    const std::string kind = detail::read_string(detail::require(p, "kind", "pairing"), "pairing.kind");
    if (kind == "reference") {
      s.pairing = PairingScheme::reference(
          p.contains("ref_index") ? detail::read_index(p.at("ref_index"), "pairing.ref_index") : 0);
    } else if (kind == "all_pairs") {
      s.pairing = PairingScheme::all();
    } else if (kind == "explicit") {
      const json& pairs = detail::require(p, "pairs", "pairing");
      if (!pairs.is_array()) throw ParseError("expected an array of [i, j]", 0, "pairing.pairs");
      std::vector<Pair> list;
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const std::string path = "pairing.pairs[" + std::to_string(k) + "]";
        if (!pairs[k].is_array() || pairs[k].size() != 2) throw ParseError("expected [i, j]", 0, path);
        list.push_back({detail::read_index(pairs[k][0], path), detail::read_index(pairs[k][1], path)});
      }
      s.pairing = PairingScheme::explicit_pairs(std::move(list));
    } else {
      throw ParseError("unknown pairing kind '" + kind + "'", 0, "pairing.kind");
    }
  }

  if (doc.contains("noise")) {
    const json& n = doc.at("noise");
    detail::check_fields(n, "noise", {"kind", "sigma", "Q", "seed"});
    const std::string kind = detail::read_string(detail::require(n, "kind", "noise"), "noise.kind");
    if (kind == "none") {
      s.noise.kind = NoiseModel::Kind::none;
    } else if (kind == "iid") {
      s.noise.kind = NoiseModel::Kind::iid;
    } else if (kind == "differenced") {
      s.noise.kind = NoiseModel::Kind::differenced;
    } else if (kind == "explicit") {
      s.noise.kind = NoiseModel::Kind::explicit_covariance;
    } else {
      throw ParseError("unknown noise kind '" + kind + "'", 0, "noise.kind");
    }
    if (n.contains("sigma")) s.noise.sigma = detail::read_number(n.at("sigma"), "noise.sigma");
    if (s.noise.kind == NoiseModel::Kind::explicit_covariance) {
      s.noise.covariance = detail::read_matrix(detail::require(n, "Q", "noise"), "noise.Q");
    } else if (n.contains("Q")) {
      throw ParseError("Q is only allowed with kind 'explicit'", 0, "noise.Q");
    }
    if (n.contains("seed")) {
      if (!n.at("seed").is_number_unsigned()) throw ParseError("expected an unsigned 64-bit integer", 0, "noise.seed");
      s.noise.seed = n.at("seed").get<std::uint64_t>();
    }
  }

  if (doc.contains("units")) {
    const json& u = doc.at("units");
    detail::check_fields(u, "units", {"mode", "f0", "c"});
    const std::string mode = detail::read_string(detail::require(u, "mode", "units"), "units.mode");
    if (mode == "scaled") {
      s.units.mode = UnitConvention::Mode::scaled;
    } else if (mode == "physical") {
      s.units.mode = UnitConvention::Mode::physical;
      s.units.f0 = detail::read_number(detail::require(u, "f0", "units"), "units.f0");
      s.units.c = detail::read_number(detail::require(u, "c", "units"), "units.c");
    } else {
      throw ParseError("unknown unit mode '" + mode + "'", 0, "units.mode");
    }
  }
  return s;
}

inline nlohmann::ordered_json scenario_to_json(const Scenario& s) {
  using detail::json;
  json doc;
  doc["dim"] = s.dim;
  doc["receivers"] = json::array();
  for (const auto& r : s.receivers) {
    doc["receivers"].push_back({{"position", detail::write_vector(r.position)}, {"velocity", detail::write_vector(r.velocity)}});
  }
  if (s.emitter) doc["emitter"] = {{"position", detail::write_vector(s.emitter->position)}};

  json pairing;
  switch (s.pairing.kind) {
    case PairingScheme::Kind::reference:
      pairing["kind"] = "reference";
      pairing["ref_index"] = s.pairing.ref_index + 1;
      break;
    case PairingScheme::Kind::all_pairs:
      pairing["kind"] = "all_pairs";
      break;
    case PairingScheme::Kind::explicit_list:
      pairing["kind"] = "explicit";
      pairing["pairs"] = json::array();
      for (const auto& p : s.pairing.pairs) pairing["pairs"].push_back({p.i + 1, p.j + 1});
      break;
  }
  doc["pairing"] = pairing;

  json noise;
  switch (s.noise.kind) {
    case NoiseModel::Kind::none: noise["kind"] = "none"; break;
    case NoiseModel::Kind::iid: noise["kind"] = "iid"; break;
    case NoiseModel::Kind::differenced: noise["kind"] = "differenced"; break;
    case NoiseModel::Kind::explicit_covariance: noise["kind"] = "explicit"; break;
  }
  noise["sigma"] = s.noise.sigma;
  if (s.noise.kind == NoiseModel::Kind::explicit_covariance) {
    noise["Q"] = json::array();
    for (Eigen::Index r = 0; r < s.noise.covariance.rows(); ++r) {
      noise["Q"].push_back(detail::write_vector(s.noise.covariance.row(r).transpose()));
    }
  }
  noise["seed"] = s.noise.seed;
  doc["noise"] = noise;

  json units;
  if (s.units.mode == UnitConvention::Mode::physical) {
    units = {{"mode", "physical"}, {"f0", s.units.f0}, {"c", s.units.c}};
  } else {
    units = {{"mode", "scaled"}};
  }
  doc["units"] = units;
  return doc;
}

inline Scenario parse_scenario(const std::string& text) {
  detail::json doc;
  try {
    doc = detail::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), detail::line_of_byte(text, e.byte));
  }
  return scenario_from_json(doc);
}

inline std::string dump_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_scenario(text);
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write scenario file '" + path + "'");
  out << dump_scenario(s);
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace fardoa
