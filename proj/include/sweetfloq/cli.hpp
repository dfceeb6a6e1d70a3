// Copyright 2026 The sweetfloq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Configuration parsing, subcommand dispatch and result serialization for
// the command-line tool. Config units: GHz, turns (phi / 2pi), ns, K.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sweetfloq/circuit.hpp"
#include "sweetfloq/common.hpp"
#include "sweetfloq/dynamics.hpp"
#include "sweetfloq/floquet.hpp"
#include "sweetfloq/noise.hpp"
#include "sweetfloq/sweep.hpp"
#include "sweetfloq/sweetspot.hpp"

#ifndef SWEETFLOQ_VERSION
#define SWEETFLOQ_VERSION "0.0.0"
#endif

namespace sweetfloq::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";

// Malformed or ill-typed configuration (exit code 2).
class SchemaError : public Error {
 public:
  using Error::Error;
};

enum ExitCode { kOk = 0, kUsage = 1, kSchema = 2, kValidity = 3, kNumerical = 4 };

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"spectrum",  "rates", "sweet-scan", "sweet-trace",
                                          "gap-check", "gate",  "two-qubit",  "limits"};
  return s;
}

// Config block name for a subcommand: "sweet-scan" -> "sweet_scan".
inline std::string block_name(const std::string& sub) {
  std::string s = sub;
  for (auto& c : s)
    if (c == '-') c = '_';
  return s;
}

// Object reader that records the field path for error messages and
// rejects unknown keys.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw SchemaError(where() + ": expected an object");
  }

  bool has(const std::string& k) {
    used_.insert(k);
    return j_->contains(k) && !(*j_)[k].is_null();
  }

  double number(const std::string& k) {
    const json& v = get(k);
    if (!v.is_number()) throw SchemaError(field(k) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw SchemaError(field(k) + ": expected a finite number");
    return x;
  }
  double number(const std::string& k, double def) { return has(k) ? number(k) : def; }

  std::int64_t integer(const std::string& k) {
    const json& v = get(k);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (std::floor(x) == x && std::abs(x) < 9e15) return static_cast<std::int64_t>(x);
    }
    throw SchemaError(field(k) + ": expected an integer");
  }
  std::int64_t integer(const std::string& k, std::int64_t def) { return has(k) ? integer(k) : def; }

  bool boolean(const std::string& k, bool def) {
    if (!has(k)) return def;
    const json& v = (*j_)[k];
    if (!v.is_boolean()) throw SchemaError(field(k) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& k, const std::string& def, const std::vector<std::string>& allowed) {
    if (!has(k)) return def;
    const json& v = (*j_)[k];
    if (!v.is_string()) throw SchemaError(field(k) + ": expected a string");
    const std::string s = v.get<std::string>();
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw SchemaError(field(k) + ": expected one of " + list);
    }
    return s;
  }

  Reader child(const std::string& k) { return Reader(get(k), field(k)); }

  const json& raw(const std::string& k) { return get(k); }

  Axis axis(const std::string& k) {
    Reader r = child(k);
    Axis a;
    a.min = r.number("min");
    a.max = r.number("max");
    const auto n = r.integer("n");
    r.done();
    if (n < 2 || n > 100000) throw SchemaError(field(k) + ".n: expected 2 <= n <= 100000");
    if (!(a.min < a.max)) throw SchemaError(field(k) + ": expected min < max");
    a.n = static_cast<int>(n);
    return a;
  }

  std::vector<double> number_list(const std::string& k) {
    const json& v = get(k);
    if (!v.is_array()) throw SchemaError(field(k) + ": expected an array of numbers");
    std::vector<double> out;
    for (size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw SchemaError(field(k) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  void done() const {
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!used_.count(it.key())) throw SchemaError(field(it.key()) + ": unknown field");
  }

  std::string field(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& get(const std::string& k) {
    used_.insert(k);
    if (!j_->contains(k) || (*j_)[k].is_null()) throw SchemaError(field(k) + ": required field is missing");
    return (*j_)[k];
  }

  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

inline json axis_json(const Axis& a) { return json{{"min", a.min}, {"max", a.max}, {"n", a.n}}; }

// ---------------------------------------------------------------------------
// Common configuration.

struct NoiseConfig {
  bool raw = false;  // raw amplitudes instead of tan(delta) / delta_f
  double tan_delta_c = 1.1e-6;
  double delta_f = 1.8e-6;
  double a_f = 0.0;  // rad/ns
  double a_d = 0.0;  // ns
  double temperature_k = 0.015;
  double ln_factor = 4.0;
};

struct DriveConfig {
  double phi_dc_turns = 0.5;
  double phi_ac_turns = 0.0;
  std::optional<double> f_ghz;
};

struct RunConfig {
  std::optional<FluxoniumParams> circuit;
  NoiseConfig noise;
  DriveConfig drive;
  double guard_fraction = 0.2;
  std::uint64_t seed = 0;
  int threads = 1;
  json blocks = json::object();  // task blocks by name, verbatim
};

inline FluxoniumParams parse_circuit(Reader r) {
  FluxoniumParams p;
  p.e_c = r.number("e_c_ghz");
  p.e_j = r.number("e_j_ghz");
  p.e_l = r.number("e_l_ghz");
  p.basis_dim = static_cast<int>(r.integer("basis_dim", 100));
  r.done();
  return p;
}

inline json circuit_json(const FluxoniumParams& p) {
  return json{{"e_c_ghz", p.e_c}, {"e_j_ghz", p.e_j}, {"e_l_ghz", p.e_l}, {"basis_dim", p.basis_dim}};
}

inline NoiseConfig parse_noise(Reader r) {
  NoiseConfig n;
  const bool helper = r.has("tan_delta_c") || r.has("delta_f");
  const bool raw = r.has("a_f_rad_per_ns") || r.has("a_d_ns");
  if (helper && raw) throw SchemaError("noise: give either tan_delta_c/delta_f or raw amplitudes, not both");
  if (raw) {
    n.raw = true;
    n.a_f = r.number("a_f_rad_per_ns", 0.0);
    n.a_d = r.number("a_d_ns", 0.0);
  } else {
    n.tan_delta_c = r.number("tan_delta_c", n.tan_delta_c);
    n.delta_f = r.number("delta_f", n.delta_f);
  }
  n.temperature_k = r.number("temperature_k", n.temperature_k);
  n.ln_factor = r.number("ln_factor", n.ln_factor);
  r.done();
  return n;
}

inline json noise_json(const NoiseConfig& n) {
  json j;
  if (n.raw) {
    j["a_f_rad_per_ns"] = n.a_f;
    j["a_d_ns"] = n.a_d;
  } else {
    j["tan_delta_c"] = n.tan_delta_c;
    j["delta_f"] = n.delta_f;
  }
  j["temperature_k"] = n.temperature_k;
  j["ln_factor"] = n.ln_factor;
  return j;
}

inline RunConfig parse_config(const json& j) {
  Reader r(j, "");
  RunConfig c;
  if (r.has("circuit")) c.circuit = parse_circuit(r.child("circuit"));
  if (r.has("noise")) c.noise = parse_noise(r.child("noise"));
  if (r.has("drive")) {
    Reader d = r.child("drive");
    c.drive.phi_dc_turns = d.number("phi_dc_turns", 0.5);
    c.drive.phi_ac_turns = d.number("phi_ac_turns", 0.0);
    if (d.has("f_ghz")) c.drive.f_ghz = d.number("f_ghz");
    d.done();
  }
  c.guard_fraction = r.number("guard_fraction", 0.2);
  if (r.has("seed")) {
    const auto s = r.integer("seed");
    if (s < 0) throw SchemaError("seed: expected a non-negative integer");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (r.has("threads")) {
    const auto t = r.integer("threads");
    if (t < 1 || t > 1024) throw SchemaError("threads: expected 1 <= threads <= 1024");
    c.threads = static_cast<int>(t);
  }
  for (const auto& s : subcommands()) {
    const std::string b = block_name(s);
    if (r.has(b)) {
      if (!j[b].is_object()) throw SchemaError(b + ": expected an object");
      c.blocks[b] = j[b];
    }
  }
  r.done();
  return c;
}

// Echo of the effective configuration. Thread count is left out: it never
// changes results and would break byte-identity across thread counts.
inline json config_echo(const RunConfig& c, const std::string& active, const json& active_block) {
  json j;
  if (c.circuit) j["circuit"] = circuit_json(*c.circuit);
  j["noise"] = noise_json(c.noise);
  json d{{"phi_dc_turns", c.drive.phi_dc_turns}, {"phi_ac_turns", c.drive.phi_ac_turns}};
  if (c.drive.f_ghz) d["f_ghz"] = *c.drive.f_ghz;
  j["drive"] = d;
  j["guard_fraction"] = c.guard_fraction;
  j["seed"] = c.seed;
  j[block_name(active)] = active_block;
  return j;
}

// ---------------------------------------------------------------------------
// Output helpers.

inline std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size()) throw NumericalError("csv: row width does not match header");
    rows_.push_back(cells);
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& v) {
      for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += v[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string num(double x) { return fmt17(x); }
inline std::string num(int x) { return std::to_string(x); }

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json matrix_json(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int k = 0; k < m.cols(); ++k) r.push_back(complex_json(m(i, k)));
    rows.push_back(r);
  }
  return rows;
}

// Collects warnings, merging repeats from grid points.
class Warnings {
 public:
  void add(const std::string& w) {
    if (!counts_.count(w)) order_.push_back(w);
    ++counts_[w];
  }
  void add_all(const std::vector<std::string>& ws, const std::string& prefix = "") {
    for (const auto& w : ws) add(prefix + w);
  }
  json to_json() const {
    json out = json::array();
    for (const auto& w : order_) {
      const int n = counts_.at(w);
      out.push_back(n > 1 ? w + " [" + std::to_string(n) + " occurrences]" : w);
    }
    return out;
  }

 private:
  std::vector<std::string> order_;
  std::map<std::string, int> counts_;
};

struct Outcome {
  json payload = json::object();
  std::optional<std::string> csv;
  Warnings warnings;
  json echo_block = json::object();
  int failed_points = 0;
  ErrorKind first_failure = ErrorKind::none;
};

inline std::string status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::none:
      return "ok";
    case ErrorKind::validity:
      return "error_validity";
    case ErrorKind::numerical:
      return "error_numerical";
    case ErrorKind::other:
      return "error_other";
  }
  return "error_other";
}

template <typename T>
void record_failures(const std::vector<PointOutcome<T>>& pts, Outcome& out, const std::string& what) {
  for (size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].ok()) continue;
    if (out.first_failure == ErrorKind::none) out.first_failure = pts[i].kind;
    ++out.failed_points;
    out.warnings.add(what + " failed: " + pts[i].error);
  }
}

// ---------------------------------------------------------------------------
// Shared model construction.

struct Context {
  const RunConfig& cfg;
  int threads = 1;
  std::uint64_t seed = 0;

  const FluxoniumParams& circuit() const {
    if (!cfg.circuit) throw SchemaError("circuit: required field is missing");
    return *cfg.circuit;
  }
  StaticSpectrum spectrum_at_pi() const {
    circuit().validate();
    return diagonalize_fluxonium(circuit(), kPi);
  }
  DrivenCircuit driven() const {
    return DrivenCircuit{spectrum_at_pi(), turns_to_rad(cfg.drive.phi_dc_turns), cfg.guard_fraction};
  }
  NoiseModel noise(const StaticSpectrum& spec_at_pi) const {
    const NoiseConfig& n = cfg.noise;
    if (n.raw) {
      NoiseModel m;
      m.a_f = n.a_f;
      m.a_d = n.a_d;
      m.temperature = n.temperature_k;
      m.ln_factor = n.ln_factor;
      m.validate();
      return m;
    }
    NoiseModel m = noise_from_circuit(spec_at_pi, n.tan_delta_c, n.delta_f, n.temperature_k, n.ln_factor);
    m.validate();
    return m;
  }
  double f_ghz(const std::string& what) const {
    if (!cfg.drive.f_ghz) throw SchemaError("drive.f_ghz: required for " + what);
    if (!(*cfg.drive.f_ghz > 0)) throw SchemaError("drive.f_ghz: expected a positive frequency");
    return *cfg.drive.f_ghz;
  }
};

inline json two_level_json(const TwoLevelParams& tl) {
  return json{{"delta_ghz", rad_ns_to_ghz(tl.delta)},
              {"amp_ghz", rad_ns_to_ghz(tl.amp)},
              {"bias_ghz", rad_ns_to_ghz(tl.bias)},
              {"omega_d_ghz", rad_ns_to_ghz(tl.omega_d)},
              {"omega_ge_ghz", rad_ns_to_ghz(tl.omega_ge())},
              {"phi_ge", tl.provenance.phi_ge},
              {"omega_ef_ghz", rad_ns_to_ghz(tl.provenance.omega_ef)}};
}

inline json rates_json(const Rates& r, bool breakdown) {
  json j{{"gamma_minus_per_us", r.gamma_minus},
         {"gamma_plus_per_us", r.gamma_plus},
         {"gamma_phi_per_us", r.gamma_phi},
         {"gamma_phi_first_order_per_us", r.gamma_phi_first_order},
         {"t1_us", finite_or_null(r.t1())},
         {"t_phi_us", finite_or_null(r.t_phi())},
         {"one_over_f_limited_t1", r.one_over_f_limited_t1}};
  if (breakdown) {
    json terms = json::array();
    for (const auto& t : r.breakdown)
      terms.push_back(json{{"channel", to_string(t.channel)},
                           {"k", t.k},
                           {"frequency_ghz", rad_ns_to_ghz(t.freq)},
                           {"weight", t.weight},
                           {"spectrum_per_ns", finite_or_null(t.spectrum)},
                           {"rate_per_us", t.contribution}});
    j["breakdown"] = terms;
  }
  return j;
}

// ---------------------------------------------------------------------------
// spectrum

inline Outcome run_spectrum(const Context& ctx, Reader r) {
  Outcome out;
  const int levels = static_cast<int>(r.integer("levels", 4));
  std::optional<Axis> sweep;
  if (r.has("phi_dc_turns")) sweep = r.axis("phi_dc_turns");
  std::optional<Axis> fl_pac, fl_f;
  if (r.has("floquet")) {
    Reader fl = r.child("floquet");
    fl_pac = fl.axis("phi_ac_turns");
    fl_f = fl.axis("f_ghz");
    fl.done();
  }
  r.done();
  if (levels < 2 || levels > 50) throw SchemaError("spectrum.levels: expected 2 <= levels <= 50");
  out.echo_block["levels"] = levels;
  if (sweep) out.echo_block["phi_dc_turns"] = axis_json(*sweep);
  if (fl_pac) out.echo_block["floquet"] = json{{"phi_ac_turns", axis_json(*fl_pac)}, {"f_ghz", axis_json(*fl_f)}};

  const FluxoniumParams& p = ctx.circuit();
  p.validate();
  const StaticSpectrum at_pi = diagonalize_fluxonium(p, kPi, std::max(levels, 3));
  const double phi_dc = turns_to_rad(ctx.cfg.drive.phi_dc_turns);
  const StaticSpectrum here = diagonalize_fluxonium(p, phi_dc, levels);
  json e = json::array();
  for (int i = 0; i < levels; ++i) e.push_back(here.energies(i) - here.energies(0));
  out.payload["phi_dc_turns"] = ctx.cfg.drive.phi_dc_turns;
  out.payload["energies_ghz"] = e;
  out.payload["omega_ge_ghz"] = here.omega_ge();
  out.payload["phi_ge"] = std::abs(here.phi_matrix(0, 1));
  out.payload["basis_dim_used"] = here.basis_dim_used;
  out.payload["convergence_change"] = here.convergence_change;
  out.payload["delta_ghz"] = at_pi.omega_ge();
  out.payload["phi_ge_at_half_flux"] = std::abs(at_pi.phi_matrix(0, 1));
  out.payload["parity_at_half_flux"] = at_pi.parity_labels;
  const double f = ctx.cfg.drive.f_ghz.value_or(0.0);
  const TwoLevelParams tl =
      two_level_reduce(at_pi, turns_to_rad(ctx.cfg.drive.phi_ac_turns), phi_dc, ghz_to_rad_ns(f), ctx.cfg.guard_fraction);
  out.payload["two_level"] = two_level_json(tl);
  if (ctx.cfg.drive.f_ghz) out.warnings.add_all(tl.warnings);

  if (sweep) {
    std::vector<std::string> header{"phi_dc_turns"};
    for (int i = 0; i < levels; ++i) header.push_back("e" + std::to_string(i) + "_ghz");
    header.push_back("omega_ge_ghz");
    header.push_back("status");
    CsvTable t(header);
    const auto pts = sweep_execute<StaticSpectrum>(sweep->n, ctx.threads, [&](size_t i) {
      return diagonalize_fluxonium(p, turns_to_rad(sweep->at(static_cast<int>(i))), levels);
    });
    for (int i = 0; i < sweep->n; ++i) {
      std::vector<std::string> row{num(sweep->at(i))};
      if (pts[i].ok()) {
        for (int l = 0; l < levels; ++l) row.push_back(num(pts[i].value->energies(l) - pts[i].value->energies(0)));
        row.push_back(num(pts[i].value->omega_ge()));
      } else {
        for (int l = 0; l <= levels; ++l) row.push_back("nan");
      }
      row.push_back(status_of(pts[i].kind));
      t.row(row);
    }
    record_failures(pts, out, "spectrum point");
    out.csv = t.str();
  }

  // Floquet quasi-energies over (phi_dc, phi_ac, f); replaces the level table
  // as the CSV payload, which then moves into the envelope.
  if (fl_pac) {
    if (out.csv) {
      out.payload["levels_csv"] = *out.csv;
      out.csv.reset();
    }
    const int n_dc = sweep ? sweep->n : 1;
    auto dc_at = [&](int d) { return sweep ? sweep->at(d) : ctx.cfg.drive.phi_dc_turns; };
    const size_t per_dc = static_cast<size_t>(fl_pac->n) * fl_f->n;
    const size_t n = per_dc * n_dc;
    const auto pts = sweep_execute<FloquetSolution>(n, ctx.threads, [&](size_t idx) {
      const int d = static_cast<int>(idx / per_dc), i = static_cast<int>((idx % per_dc) / fl_f->n),
                k = static_cast<int>(idx % fl_f->n);
      const DrivenCircuit dcirc{at_pi, turns_to_rad(dc_at(d)), ctx.cfg.guard_fraction};
      return floquet_solve_extended(dcirc.at(turns_to_rad(fl_pac->at(i)), fl_f->at(k)));
    });
    CsvTable t({"phi_dc_turns", "phi_ac_turns", "f_ghz", "eps0_ghz", "eps1_ghz", "eps01_ghz", "status"});
    for (size_t idx = 0; idx < n; ++idx) {
      const int d = static_cast<int>(idx / per_dc), i = static_cast<int>((idx % per_dc) / fl_f->n),
                k = static_cast<int>(idx % fl_f->n);
      std::vector<std::string> row{num(dc_at(d)), num(fl_pac->at(i)), num(fl_f->at(k))};
      if (pts[idx].ok()) {
        const FloquetSolution& s = *pts[idx].value;
        for (double v : {s.eps_mode[0], s.eps_mode[1], s.eps01}) row.push_back(num(rad_ns_to_ghz(v)));
      } else {
        for (int c = 0; c < 3; ++c) row.push_back("nan");
      }
      row.push_back(status_of(pts[idx].kind));
      t.row(row);
    }
    record_failures(pts, out, "Floquet point");
    out.csv = t.str();
  }
  return out;
}

// ---------------------------------------------------------------------------
// rates

inline Outcome run_rates(const Context& ctx, Reader r) {
  Outcome out;
  const bool breakdown = r.boolean("breakdown", true);
  r.done();
  out.echo_block["breakdown"] = breakdown;
  const DrivenCircuit dc = ctx.driven();
  const NoiseModel m = ctx.noise(dc.spec_at_pi);
  const double phi_ac = turns_to_rad(ctx.cfg.drive.phi_ac_turns);
  const bool driven = ctx.cfg.drive.f_ghz.has_value();
  if (!driven && phi_ac != 0.0) throw SchemaError("drive.f_ghz: required when drive.phi_ac_turns is nonzero");
  const TwoLevelParams tl = dc.at(phi_ac, ctx.cfg.drive.f_ghz.value_or(0.0));
  out.payload["two_level"] = two_level_json(tl);
  out.payload["noise"] = json{{"a_f_rad_per_ns", m.a_f}, {"a_d_ns", m.a_d}, {"kt_rad_per_ns", m.kt()}};
  Rates rates;
  if (driven) {
    out.warnings.add_all(tl.warnings);
    const FloquetSolution sol = floquet_solve_extended(tl);
    const FilterWeights w = filter_weights(sol);
    rates = dynamical_rates(w, m);
    out.payload["kind"] = "dynamical";
    out.payload["eps01_ghz"] = rad_ns_to_ghz(sol.eps01);
    out.payload["g0phi"] = w.g(Channel::phi, 0).real();
    out.payload["conservation_sum"] = w.conservation_sum();
    out.payload["truncation_k"] = sol.truncation_k;
  } else {
    rates = static_rates(tl, m);
    out.payload["kind"] = "static";
    out.payload["eps01_ghz"] = rad_ns_to_ghz(tl.omega_ge());
  }
  out.payload["rates"] = rates_json(rates, breakdown);
  out.warnings.add_all(rates.warnings);
  return out;
}

// ---------------------------------------------------------------------------
// sweet-scan: rates and dc dispersion on a grid

struct ScanPoint {
  double eps01 = 0, g0phi = 0, g1phi = 0;
  Rates rates;
  std::vector<std::string> warnings;
};

inline Outcome run_sweet_scan(const Context& ctx, Reader r) {
  Outcome out;
  const Axis fa = r.axis("f_ghz");
  const Axis pa = r.axis("phi_ac_turns");
  r.done();
  out.echo_block["f_ghz"] = axis_json(fa);
  out.echo_block["phi_ac_turns"] = axis_json(pa);
  const DrivenCircuit dc = ctx.driven();
  const NoiseModel m = ctx.noise(dc.spec_at_pi);
  const size_t n = static_cast<size_t>(fa.n) * pa.n;
  const auto pts = sweep_execute<ScanPoint>(n, ctx.threads, [&](size_t idx) {
    const int i = static_cast<int>(idx / fa.n), k = static_cast<int>(idx % fa.n);
    const TwoLevelParams tl = dc.at(turns_to_rad(pa.at(i)), fa.at(k));
    const FloquetSolution sol = floquet_solve_extended(tl);
    const FilterWeights w = filter_weights(sol);
    ScanPoint p;
    p.eps01 = rad_ns_to_ghz(sol.eps01);
    p.g0phi = w.g(Channel::phi, 0).real();
    p.g1phi = std::abs(w.g(Channel::phi, 1));
    p.rates = dynamical_rates(w, m);
    p.warnings = tl.warnings;
    p.warnings.insert(p.warnings.end(), p.rates.warnings.begin(), p.rates.warnings.end());
    return p;
  });
  CsvTable t({"phi_ac_turns", "f_ghz", "eps01_ghz", "g0phi", "abs_g1phi", "t1_us", "t_phi_us", "gamma_minus_per_us",
              "gamma_plus_per_us", "gamma_phi_per_us", "status"});
  int ok = 0;
  for (size_t idx = 0; idx < n; ++idx) {
    const int i = static_cast<int>(idx / fa.n), k = static_cast<int>(idx % fa.n);
    std::vector<std::string> row{num(pa.at(i)), num(fa.at(k))};
    if (pts[idx].ok()) {
      const ScanPoint& p = *pts[idx].value;
      for (double v : {p.eps01, p.g0phi, p.g1phi, p.rates.t1(), p.rates.t_phi(), p.rates.gamma_minus,
                       p.rates.gamma_plus, p.rates.gamma_phi})
        row.push_back(num(v));
      out.warnings.add_all(p.warnings);
      ++ok;
    } else {
      for (int c = 0; c < 8; ++c) row.push_back("nan");
    }
    row.push_back(status_of(pts[idx].kind));
    t.row(row);
  }
  record_failures(pts, out, "grid point");
  out.payload["points"] = n;
  out.payload["points_ok"] = ok;
  out.csv = t.str();
  return out;
}

// ---------------------------------------------------------------------------
// sweet-trace: dc sweet manifold curves and doubly sweet points

inline Outcome run_sweet_trace(const Context& ctx, Reader r) {
  Outcome out;
  ScanRegion region{r.axis("f_ghz"), r.axis("phi_ac_turns")};
  const bool doubly = r.boolean("doubly", true);
  const double tol = r.number("tol", 1e-6);
  r.done();
  out.echo_block["f_ghz"] = axis_json(region.f_d);
  out.echo_block["phi_ac_turns"] = axis_json(region.phi_ac);
  out.echo_block["doubly"] = doubly;
  out.echo_block["tol"] = tol;
  if (!(tol > 0)) throw SchemaError("sweet_trace.tol: expected a positive number");
  const DrivenCircuit dc = ctx.driven();
  const NoiseModel m = ctx.noise(dc.spec_at_pi);
  SweetOptions opt;
  opt.tol = tol;
  opt.threads = ctx.threads;
  opt.noise = &m;
  const DcScan scan = trace_dc_manifold(dc, region, opt);
  std::vector<SweetPoint> ds;
  if (doubly) ds = find_doubly_sweet(dc, scan, region.f_d.step(), opt);

  CsvTable t({"curve", "phi_ac_turns", "f_ghz", "eps01_ghz", "kind", "gap_flag", "refined", "dispersion_dc_ghz",
              "dispersion_ac_ghz", "t1_us", "t_phi_us"});
  auto add = [&](int curve, const SweetPoint& p) {
    const double t1 = p.rates ? p.rates->t1() : std::nan("");
    const double tp = p.rates ? p.rates->t_phi() : std::nan("");
    t.row({num(curve), num(rad_to_turns(p.phi_ac)), num(p.f_d), num(p.eps01), to_string(p.kind),
           p.gap_flag ? "1" : "0", p.refined ? "1" : "0", num(rad_ns_to_ghz(p.dispersion_dc)),
           num(rad_ns_to_ghz(p.dispersion_ac)), num(t1), num(tp)});
  };
  int flagged = 0, long_lived = 0, total = 0;
  std::optional<SweetPoint> best;
  auto score = [](const SweetPoint& p) { return std::min(p.rates->t1(), p.rates->t_phi()); };
  for (size_t c = 0; c < scan.curves.size(); ++c)
    for (const auto& p : scan.curves[c]) {
      add(static_cast<int>(c), p);
      ++total;
      if (p.gap_flag) {
        ++flagged;
        continue;
      }
      if (p.rates && p.rates->t_phi() > 1000.0 && p.rates->t1() > 300.0) ++long_lived;
      if (p.rates && (!best || score(p) > score(*best))) best = p;
    }
  json dj = json::array();
  for (const auto& p : ds) {
    add(-1, p);
    dj.push_back(json{{"phi_ac_turns", rad_to_turns(p.phi_ac)},
                      {"f_ghz", p.f_d},
                      {"eps01_ghz", p.eps01},
                      {"refined", p.refined},
                      {"t1_us", p.rates ? finite_or_null(p.rates->t1()) : json(nullptr)},
                      {"t_phi_us", p.rates ? finite_or_null(p.rates->t_phi()) : json(nullptr)}});
    if (!p.refined) out.warnings.add("doubly sweet point not refined to tolerance");
  }
  out.payload["curves"] = scan.curves.size();
  out.payload["dc_points"] = total;
  out.payload["gap_flagged_points"] = flagged;
  out.payload["points_t_phi_over_1000us_t1_over_300us"] = long_lived;
  out.payload["doubly_sweet"] = dj;
  if (best)
    out.payload["longest_lived"] = json{{"phi_ac_turns", rad_to_turns(best->phi_ac)},
                                        {"f_ghz", best->f_d},
                                        {"eps01_ghz", best->eps01},
                                        {"t1_us", finite_or_null(best->rates->t1())},
                                        {"t_phi_us", finite_or_null(best->rates->t_phi())}};
  if (flagged) out.warnings.add("sweet points with eps01 below 1e-3 w_d are flagged as near a quasi-energy crossing");
  out.csv = t.str();
  return out;
}

// ---------------------------------------------------------------------------
// gap-check

inline Outcome run_gap_check(const Context& ctx, Reader r) {
  Outcome out;
  std::vector<int> orders{1, 2, 3};
  if (r.has("orders")) {
    orders.clear();
    for (double x : r.number_list("orders")) {
      if (x < 1 || x > 20 || std::floor(x) != x) throw SchemaError("gap_check.orders: expected integers in [1, 20]");
      orders.push_back(static_cast<int>(x));
    }
  }
  const std::string regime = r.string("regime", "auto", {"auto", "weak", "strong"});
  const double rel = r.number("rel_window", 0.03);
  const bool fwhm = r.boolean("fwhm", true);
  r.done();
  if (!(rel > 0 && rel < 0.5)) throw SchemaError("gap_check.rel_window: expected 0 < rel_window < 0.5");
  out.echo_block["orders"] = orders;
  out.echo_block["regime"] = regime;
  out.echo_block["rel_window"] = rel;
  out.echo_block["fwhm"] = fwhm;

  const DrivenCircuit dc = ctx.driven();
  const TwoLevelParams base = dc.at(turns_to_rad(ctx.cfg.drive.phi_ac_turns), 1.0);
  if (!(base.amp > 0)) throw ValidityError("gap-check: drive.phi_ac_turns must be nonzero");
  out.payload["two_level"] = two_level_json(base);
  out.payload["two_level"].erase("omega_d_ghz");
  json rows = json::array();
  const auto pts = sweep_execute<json>(orders.size(), ctx.threads, [&](size_t i) {
    const int m = orders[i];
    const bool strong = regime == "strong" || (regime == "auto" && base.amp > 0.5 * base.omega_ge());
    const double center = (strong ? std::abs(base.bias) : base.omega_ge()) / m;
    if (!(center > 0)) throw ValidityError("gap-check: resonance frequency is zero");
    const TwoLevelParams tl = base.with_omega(center);
    const GapEstimate est = strong ? gap_strong(m, tl) : gap_weak(m, tl);
    const NumericGap ng = numeric_gap(tl, center, rel);
    // Re-evaluate the closed form at the located minimum.
    const GapEstimate at_min = strong ? gap_strong(m, tl.with_omega(ng.omega)) : gap_weak(m, tl.with_omega(ng.omega));
    json j{{"m", m},
           {"regime", to_string(est.regime)},
           {"f_center_ghz", rad_ns_to_ghz(center)},
           {"f_min_ghz", rad_ns_to_ghz(ng.omega)},
           {"gap_numeric_ghz", rad_ns_to_ghz(ng.gap)},
           {"gap_closed_form_ghz", at_min.gap},
           {"relative_difference", at_min.gap > 0 ? json(rad_ns_to_ghz(ng.gap) / at_min.gap - 1.0) : json(nullptr)},
           {"mixing_angle", est.theta},
           {"fwhm_closed_form_ghz", at_min.fwhm}};
    if (fwhm) {
      try {
        const double w = numeric_fwhm(tl, ng.omega, 0.05 * std::max(ng.gap, 1e-9) / m);
        j["fwhm_numeric_ghz"] = rad_ns_to_ghz(w);
      } catch (const NumericalError& e) {
        j["fwhm_numeric_ghz"] = nullptr;
        j["fwhm_error"] = e.what();
      }
    }
    j["warnings"] = at_min.warnings;
    return j;
  });
  for (size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].ok()) {
      rows.push_back(*pts[i].value);
      for (const auto& w : (*pts[i].value)["warnings"]) out.warnings.add("m=" + std::to_string(orders[i]) + ": " + w.get<std::string>());
    } else {
      rows.push_back(json{{"m", orders[i]}, {"status", status_of(pts[i].kind)}, {"error", pts[i].error}});
    }
  }
  record_failures(pts, out, "gap order");
  out.payload["orders"] = rows;
  return out;
}

// ---------------------------------------------------------------------------
// gate

inline json populations_json(const GateResult& g) {
  json t = json::array(), p0 = json::array(), p1 = json::array();
  for (size_t i = 0; i < g.times.size(); ++i) {
    t.push_back(g.times[i]);
    p0.push_back(g.populations[i][0]);
    p1.push_back(g.populations[i][1]);
  }
  return json{{"t_ns", t}, {"p_w0", p0}, {"p_w1", p1}};
}

inline Outcome run_gate(const Context& ctx, Reader r, const std::string& protocol) {
  Outcome out;
  const double tau = r.number("tau_ns", 100.0);
  const double rabi_ramp = r.number("rabi_ramp_fraction", 0.1);
  const double phase_ramp = r.number("phase_ramp_fraction", 0.2);
  const double t_ramp = r.number("t_ramp_ns", 30.0);
  std::optional<double> rabi_amp, omega_prime;
  if (r.has("rabi_amplitude_ghz")) rabi_amp = r.number("rabi_amplitude_ghz");
  if (r.has("omega_prime_ghz")) omega_prime = r.number("omega_prime_ghz");
  std::optional<Axis> chevron;
  if (r.has("chevron_detuning_mhz")) chevron = r.axis("chevron_detuning_mhz");
  const int samples = static_cast<int>(r.integer("population_samples", 101));
  r.done();
  if (!(tau > 0)) throw SchemaError("gate.tau_ns: expected a positive duration");
  if (!(rabi_ramp >= 0 && rabi_ramp < 0.5)) throw SchemaError("gate.rabi_ramp_fraction: expected [0, 0.5)");
  if (!(phase_ramp > 0 && phase_ramp <= 0.5)) throw SchemaError("gate.phase_ramp_fraction: expected (0, 0.5]");
  if (!(t_ramp >= 0)) throw SchemaError("gate.t_ramp_ns: expected a non-negative duration");
  if (samples < 0 || samples > 100000) throw SchemaError("gate.population_samples: expected 0..100000");
  out.echo_block = json{{"tau_ns", tau},
                        {"rabi_ramp_fraction", rabi_ramp},
                        {"phase_ramp_fraction", phase_ramp},
                        {"t_ramp_ns", t_ramp},
                        {"population_samples", samples}};
  if (rabi_amp) out.echo_block["rabi_amplitude_ghz"] = *rabi_amp;
  if (omega_prime) out.echo_block["omega_prime_ghz"] = *omega_prime;
  if (chevron) out.echo_block["chevron_detuning_mhz"] = axis_json(*chevron);

  const DrivenCircuit dc = ctx.driven();
  const TwoLevelParams tl = dc.at(turns_to_rad(ctx.cfg.drive.phi_ac_turns), ctx.f_ghz("gate"));
  out.warnings.add_all(tl.warnings);
  const FloquetSolution sol = floquet_solve_extended(tl);
  out.payload["protocol"] = protocol;
  out.payload["two_level"] = two_level_json(tl);
  out.payload["eps01_ghz"] = rad_ns_to_ghz(sol.eps01);
  EvolveOptions eo;
  eo.population_samples = samples;

  auto gate_json = [&](const GateResult& g) {
    json j{{"target", g.target},
           {"fidelity", g.fidelity},
           {"unitary_floquet_frame", matrix_json(g.unitary_floquet_frame)},
           {"unitarity_defect", g.unitarity_defect},
           {"z_pre", g.z_pre},
           {"z_post", g.z_post}};
    if (!g.times.empty()) j["populations"] = populations_json(g);
    out.warnings.add_all(g.warnings);
    return j;
  };

  if (protocol == "x" || protocol == "sqrt-x") {
    RabiSettings set;
    set.tau = tau;
    set.ramp_fraction = rabi_ramp;
    if (omega_prime) set.omega_prime = ghz_to_rad_ns(*omega_prime);
    const RabiCalibration c = calibrate_rotation(tl, protocol, set, eo);
    out.payload["calibration"] = json{{"amplitude_ghz", rad_ns_to_ghz(c.amplitude)},
                                      {"predicted_amplitude_ghz", rad_ns_to_ghz(c.predicted_amplitude)},
                                      {"omega_prime_ghz", rad_ns_to_ghz(c.omega_prime)},
                                      {"tone_phase", c.phase},
                                      {"tau_ns", c.tau},
                                      {"abs_g0_minus", c.g0_minus}};
    out.payload["gate"] = gate_json(c.result);
  } else if (protocol == "s" || protocol == "t") {
    const PhaseCalibration c = calibrate_phase_gate(tl, protocol, tau, phase_ramp, eo);
    out.payload["calibration"] = json{{"delta_amp_ghz", rad_ns_to_ghz(c.delta_amp)},
                                      {"predicted_delta_amp_ghz", rad_ns_to_ghz(c.predicted_delta_amp)},
                                      {"delta_phi_ac_turns", rad_to_turns(c.delta_amp / tl.amp_per_phi_ac())},
                                      {"tau_ns", c.tau},
                                      {"target_phase", c.target_phase},
                                      {"simulated_phase", c.simulated},
                                      {"predicted_phase", c.predicted}};
    out.payload["gate"] = gate_json(c.result);
  } else if (protocol == "rabi") {
    const FilterWeights w = filter_weights(sol);
    const cplx g0m = w.g(Channel::minus, 0);
    const double wp = omega_prime ? ghz_to_rad_ns(*omega_prime) : sol.eps01;
    const double d = rabi_amp ? ghz_to_rad_ns(*rabi_amp) : kPi / (std::abs(g0m) * tau * (1.0 - rabi_ramp));
    const GateResult g = evolve_closed(rabi_schedule(tl, d, tau, wp, -std::arg(g0m), rabi_ramp), tl, eo, "x");
    out.payload["tone"] = json{{"amplitude_ghz", rad_ns_to_ghz(d)}, {"omega_prime_ghz", rad_ns_to_ghz(wp)},
                               {"tau_ns", tau}, {"abs_g0_minus", std::abs(g0m)}};
    out.payload["transfer"] = std::norm(g.unitary_floquet_frame(1, 0));
    out.payload["gate"] = gate_json(g);
    if (chevron) {
      std::vector<double> wps;
      for (int i = 0; i < chevron->n; ++i) wps.push_back(sol.eps01 + ghz_to_rad_ns(1e-3 * chevron->at(i)));
      const auto pts = sweep_execute<ChevronPoint>(wps.size(), ctx.threads, [&](size_t i) {
        const GateResult gi = evolve_closed(rabi_schedule(tl, d, tau, wps[i], -std::arg(g0m), rabi_ramp), tl);
        return ChevronPoint{wps[i], std::norm(gi.unitary_floquet_frame(1, 0))};
      });
      CsvTable t({"detuning_mhz", "omega_prime_ghz", "transfer", "status"});
      for (size_t i = 0; i < wps.size(); ++i)
        t.row({num(chevron->at(static_cast<int>(i))), num(rad_ns_to_ghz(wps[i])),
               pts[i].ok() ? num(pts[i].value->transfer) : "nan", status_of(pts[i].kind)});
      record_failures(pts, out, "chevron point");
      out.csv = t.str();
    }
  } else if (protocol == "ramp") {
    const RampGapCheck gap = ramp_gap_check(tl);
    const AdiabaticResult a = adiabatic_map(tl, t_ramp, eo, gap);
    const AdiabaticResult sudden = adiabatic_map(tl, 0.0, eo, gap);
    auto pj = [](const AdiabaticResult& x) {
      return json{{"w0_to_g", x.populations[0][0]},
                  {"w0_to_e", x.populations[0][1]},
                  {"w1_to_g", x.populations[1][0]},
                  {"w1_to_e", x.populations[1][1]}};
    };
    out.payload["t_ramp_ns"] = t_ramp;
    out.payload["fidelity"] = a.fidelity;
    out.payload["populations"] = pj(a);
    out.payload["sudden_limit"] = json{{"fidelity", sudden.fidelity}, {"populations", pj(sudden)}};
    out.payload["min_gap_along_ramp_ghz"] = rad_ns_to_ghz(gap.min_gap);
    out.payload["amp_at_min_gap_ghz"] = rad_ns_to_ghz(gap.amp_at_min);
  }
  return out;
}

// ---------------------------------------------------------------------------
// two-qubit

struct QubitBlock {
  FluxoniumParams circuit;
  double phi_dc_turns = 0.5;
};

inline QubitBlock parse_qubit(Reader r) {
  QubitBlock q;
  q.circuit = parse_circuit(r.child("circuit"));
  q.phi_dc_turns = r.number("phi_dc_turns");
  r.done();
  return q;
}

inline json qubit_json(const QubitBlock& q) {
  return json{{"circuit", circuit_json(q.circuit)}, {"phi_dc_turns", q.phi_dc_turns}};
}

inline json point_json(const SweetPoint& p) {
  return json{{"phi_ac_turns", rad_to_turns(p.phi_ac)},
              {"f_ghz", p.f_d},
              {"eps01_ghz", p.eps01},
              {"dispersion_dc_ghz", rad_ns_to_ghz(p.dispersion_dc)}};
}

inline json terms_json(const InteractionTerms& t) {
  return json{{"flip_flop_ghz", complex_json(t.flip_flop / kTwoPi)},
              {"abs_flip_flop_ghz", std::abs(t.flip_flop) / kTwoPi},
              {"zz_ghz", t.zz / kTwoPi},
              {"detuning_ghz", rad_ns_to_ghz(t.detuning)},
              {"resonant", t.resonant},
              {"swap_time_ns", t.swap_time},
              {"sqrt_iswap_time_ns", t.sqrt_iswap_time}};
}

struct TwoQubitPoint {
  double fidelity = 0.0;
  ZOptimized4 z;
};

inline Outcome run_two_qubit(const Context& ctx, Reader r) {
  Outcome out;
  TwoQubitSystem sys;
  const QubitBlock left = parse_qubit(r.child("left"));
  const QubitBlock right = parse_qubit(r.child("right"));
  sys.left = {left.circuit, turns_to_rad(left.phi_dc_turns)};
  sys.right = {right.circuit, turns_to_rad(right.phi_dc_turns)};
  sys.j_coupling = r.number("j_ghz");
  {
    Reader p = r.child("right_drive");
    sys.right_phi_ac = turns_to_rad(p.number("phi_ac_turns"));
    sys.right_f = p.number("f_ghz");
    p.done();
  }
  {
    Reader p = r.child("left_idle");
    sys.left_idle_phi_ac = turns_to_rad(p.number("phi_ac_turns"));
    sys.left_idle_f = p.number("f_ghz");
    p.done();
  }
  {
    Reader p = r.child("left_gate");
    sys.left_gate_phi_ac_lo = turns_to_rad(p.number("phi_ac_turns_min"));
    sys.left_gate_phi_ac_hi = turns_to_rad(p.number("phi_ac_turns_max"));
    sys.left_gate_f = p.number("f_ghz");
    p.done();
  }
  sys.path_samples = static_cast<int>(r.integer("path_samples", 21));
  Reader g = r.child("grid");
  const Axis tw = g.axis("tau_wait_ns");
  const Axis tr = g.axis("t_ramp_ns");
  g.done();
  const bool open = r.boolean("open_system", false);
  const int samples = static_cast<int>(r.integer("noise_samples", 64));
  const bool swap_check = r.boolean("swap_check", true);
  r.done();
  if (open && samples < 1) throw SchemaError("two_qubit.noise_samples: expected a positive integer");
  if (tw.min < 0) throw SchemaError("two_qubit.grid.tau_wait_ns: expected non-negative durations");
  if (!(tr.min > 0)) throw SchemaError("two_qubit.grid.t_ramp_ns: expected positive durations");
  if (sys.path_samples < 4 || sys.path_samples > 1000) throw SchemaError("two_qubit.path_samples: expected 4..1000");
  out.echo_block = json{{"left", qubit_json(left)},
                        {"right", qubit_json(right)},
                        {"j_ghz", sys.j_coupling},
                        {"right_drive", {{"phi_ac_turns", rad_to_turns(sys.right_phi_ac)}, {"f_ghz", sys.right_f}}},
                        {"left_idle", {{"phi_ac_turns", rad_to_turns(sys.left_idle_phi_ac)}, {"f_ghz", sys.left_idle_f}}},
                        {"left_gate",
                         {{"phi_ac_turns_min", rad_to_turns(sys.left_gate_phi_ac_lo)},
                          {"phi_ac_turns_max", rad_to_turns(sys.left_gate_phi_ac_hi)},
                          {"f_ghz", sys.left_gate_f}}},
                        {"path_samples", sys.path_samples},
                        {"grid", {{"tau_wait_ns", axis_json(tw)}, {"t_ramp_ns", axis_json(tr)}}},
                        {"open_system", open},
                        {"noise_samples", samples},
                        {"swap_check", swap_check}};
  if (ctx.cfg.noise.raw)
    throw ValidityError("two-qubit: noise must be given as tan_delta_c / delta_f so it can be scaled per qubit");

  TwoQubitNoiseSettings ns;
  ns.tan_delta = ctx.cfg.noise.tan_delta_c;
  ns.delta_f = ctx.cfg.noise.delta_f;
  ns.temperature = ctx.cfg.noise.temperature_k;
  ns.ln_factor = ctx.cfg.noise.ln_factor;
  const TwoQubitSetup st = prepare_two_qubit(sys, ns);
  out.warnings.add_all(st.warnings);

  out.payload["right_point"] = point_json(st.right_point);
  out.payload["left_gate_point"] = point_json(st.left_gate);
  out.payload["left_idle_point"] = point_json(st.left_idle);
  out.payload["gate_terms"] = terms_json(st.gate_terms);
  out.payload["idle_terms"] = terms_json(st.idle_terms);
  out.payload["idle_stray_flip_flop_ratio"] =
      std::abs(st.idle_terms.flip_flop) / std::abs(st.idle_terms.detuning);
  if (std::abs(st.gate_terms.zz) > 1e-12 * st.j_rad_ns())
    out.warnings.add("residual ZZ coupling at the gate point exceeds 1e-12 J");
  if (swap_check) {
    const SwapMeasurement sw = measure_swap_time(st, 2.5 * st.gate_terms.swap_time);
    out.payload["swap_check"] = json{{"predicted_ns", st.gate_terms.swap_time},
                                     {"simulated_ns", sw.swap_time},
                                     {"max_transfer", sw.max_transfer},
                                     {"relative_difference", sw.swap_time / st.gate_terms.swap_time - 1.0}};
  }

  const size_t n = static_cast<size_t>(tw.n) * tr.n;
  const auto pts = sweep_execute<TwoQubitPoint>(n, ctx.threads, [&](size_t idx) {
    const int i = static_cast<int>(idx / tr.n), k = static_cast<int>(idx % tr.n);
    const TwoQubitResult res = two_qubit_closed(st, tr.at(k), tw.at(i));
    return TwoQubitPoint{res.fidelity, res.z};
  });
  CsvTable t({"tau_wait_ns", "t_ramp_ns", "fidelity", "status"});
  std::optional<size_t> best;
  for (size_t idx = 0; idx < n; ++idx) {
    const int i = static_cast<int>(idx / tr.n), k = static_cast<int>(idx % tr.n);
    t.row({num(tw.at(i)), num(tr.at(k)), pts[idx].ok() ? num(pts[idx].value->fidelity) : "nan",
           status_of(pts[idx].kind)});
    if (pts[idx].ok() && (!best || pts[idx].value->fidelity > pts[*best].value->fidelity)) best = idx;
  }
  record_failures(pts, out, "grid point");
  out.csv = t.str();
  if (best) {
    const int i = static_cast<int>(*best / tr.n), k = static_cast<int>(*best % tr.n);
    json b{{"tau_wait_ns", tw.at(i)},
           {"t_ramp_ns", tr.at(k)},
           {"fidelity", pts[*best].value->fidelity},
           {"z_phases", pts[*best].value->z.phases}};
    if (open) {
      TwoQubitOptions o;
      o.noise_samples = samples;
      o.seed = ctx.seed;
      o.stream = *best;
      o.threads = ctx.threads;
      const double f = two_qubit_open(st, tr.at(k), tw.at(i), pts[*best].value->z, o);
      b["open_system"] = json{
          {"fidelity", f},
          {"samples", samples},
          {"method",
           "Lindblad dielectric and sideband 1/f channels at the nearest path sample, plus quasi-static Gaussian "
           "dc-flux offsets for low-frequency 1/f noise; single-qubit Z phases from the closed-system optimum"},
          {"rng", "mt19937_64 seeded by seed_seq(seed, grid index, sample index)"}};
    }
    out.payload["optimum"] = b;
  }
  return out;
}

// ---------------------------------------------------------------------------
// limits

inline Outcome run_limits(const Context& ctx, Reader r) {
  (void)ctx;
  Outcome out;
  double fm_omega = 1.0;
  std::vector<double> fm_split{0.8, 0.05, 0.02}, fm_slope{1.0, 0.3, 0.1};
  if (r.has("frequency_modulation")) {
    Reader f = r.child("frequency_modulation");
    fm_omega = f.number("omega_ghz", fm_omega);
    if (f.has("splitting_ghz")) fm_split = f.number_list("splitting_ghz");
    if (f.has("slope")) fm_slope = f.number_list("slope");
    f.done();
  }
  double sl_detuning = 0.01, sl_rabi = 0.02, sl_slope = 1.0, sl_s0 = 1e-6, sl_cutoff = 0.05;
  if (r.has("spin_locking")) {
    Reader s = r.child("spin_locking");
    sl_detuning = s.number("detuning_ghz", sl_detuning);
    sl_rabi = s.number("rabi_ghz", sl_rabi);
    sl_slope = s.number("slope", sl_slope);
    sl_s0 = s.number("spectrum_s0_per_ns", sl_s0);
    sl_cutoff = s.number("spectrum_cutoff_ghz", sl_cutoff);
    s.done();
  }
  r.done();
  if (!(fm_omega > 0)) throw SchemaError("limits.frequency_modulation.omega_ghz: expected a positive number");
  if (fm_split.size() != fm_slope.size() || fm_split.empty())
    throw SchemaError("limits.frequency_modulation: splitting_ghz and slope need equal, non-zero length");
  if (!(sl_cutoff > 0)) throw SchemaError("limits.spin_locking.spectrum_cutoff_ghz: expected a positive number");
  out.echo_block = json{
      {"frequency_modulation", {{"omega_ghz", fm_omega}, {"splitting_ghz", fm_split}, {"slope", fm_slope}}},
      {"spin_locking",
       {{"detuning_ghz", sl_detuning},
        {"rabi_ghz", sl_rabi},
        {"slope", sl_slope},
        {"spectrum_s0_per_ns", sl_s0},
        {"spectrum_cutoff_ghz", sl_cutoff}}}};

  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-300); };
  FrequencyModulation fm;
  fm.omega = ghz_to_rad_ns(fm_omega);
  for (size_t k = 0; k < fm_split.size(); ++k) {
    fm.splitting.push_back(ghz_to_rad_ns(fm_split[k]));
    fm.splitting_slope.push_back(fm_slope[k]);
  }
  const FrequencyModulationLimit fl = limit_frequency_modulation(fm);
  json gk = json::array();
  double worst = rel(fl.eps01_analytic, fl.eps01_solver);
  for (size_t k = 0; k < fl.g_analytic.size(); ++k) {
    const double e = std::abs(fl.g_analytic[k] - fl.g_solver[k]) / std::max(std::abs(fl.g_analytic[k]), 1e-300);
    if (std::abs(fl.g_analytic[k]) > 0) worst = std::max(worst, e);
    gk.push_back(json{{"k", k}, {"analytic", complex_json(fl.g_analytic[k])}, {"solver", complex_json(fl.g_solver[k])}});
  }
  out.payload["frequency_modulation"] = json{{"eps01_analytic_ghz", rad_ns_to_ghz(fl.eps01_analytic)},
                                             {"eps01_solver_ghz", rad_ns_to_ghz(fl.eps01_solver)},
                                             {"g_phi", gk},
                                             {"max_relative_difference", worst}};

  const double wc = ghz_to_rad_ns(sl_cutoff);
  auto spectrum = [&](double w) { return sl_s0 / (1.0 + (w / wc) * (w / wc)); };
  const SpinLockingLimit sl =
      limit_spin_locking(ghz_to_rad_ns(sl_detuning), ghz_to_rad_ns(sl_rabi), sl_slope, spectrum);
  double sworst = rel(sl.eps01_analytic, sl.eps01_solver);
  for (auto [a, b] : {std::pair{sl.gamma_phi_analytic, sl.gamma_phi_solver},
                      std::pair{sl.gamma_minus_analytic, sl.gamma_minus_solver},
                      std::pair{sl.gamma_plus_analytic, sl.gamma_plus_solver}})
    if (a > 0) sworst = std::max(sworst, rel(a, b));
  out.payload["spin_locking"] = json{{"eps01_analytic_ghz", rad_ns_to_ghz(sl.eps01_analytic)},
                                     {"eps01_solver_ghz", rad_ns_to_ghz(sl.eps01_solver)},
                                     {"gamma_phi_analytic_per_ns", sl.gamma_phi_analytic},
                                     {"gamma_phi_solver_per_ns", sl.gamma_phi_solver},
                                     {"gamma_minus_analytic_per_ns", sl.gamma_minus_analytic},
                                     {"gamma_minus_solver_per_ns", sl.gamma_minus_solver},
                                     {"gamma_plus_analytic_per_ns", sl.gamma_plus_analytic},
                                     {"gamma_plus_solver_per_ns", sl.gamma_plus_solver},
                                     {"max_relative_difference", sworst}};
  return out;
}

// ---------------------------------------------------------------------------
// Dispatch and envelope.

struct RunOptions {
  int threads = 1;
  std::optional<std::uint64_t> seed;
  std::string protocol;  // gate only
};

struct Envelope {
  json document;
  std::optional<std::string> csv;
  int failed_points = 0;
  ErrorKind first_failure = ErrorKind::none;
};

inline json provenance(std::uint64_t seed, const std::string& sub) {
  json p{{"code_version", SWEETFLOQ_VERSION}, {"subcommand", sub}};
  // Reproducible builds convention: a fixed epoch keeps output bytes stable.
  if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long t = std::strtoll(e, &end, 10);
    if (end && *end == '\0') {
      const std::time_t tt = static_cast<std::time_t>(t);
      std::tm tm{};
      gmtime_r(&tt, &tm);
      char buf[32];
      std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
      p["timestamp"] = buf;
    } else {
      p["timestamp"] = nullptr;
    }
  } else {
    p["timestamp"] = nullptr;
  }
  p["seed"] = seed;
  return p;
}

inline Envelope run(const std::string& sub, const json& config, const RunOptions& ro) {
  if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end())
    throw SchemaError("unknown subcommand '" + sub + "'");
  const RunConfig cfg = parse_config(config);
  Context ctx{cfg, ro.threads > 0 ? ro.threads : cfg.threads, ro.seed.value_or(cfg.seed)};
  const std::string b = block_name(sub);
  const json block = cfg.blocks.contains(b) ? cfg.blocks[b] : json::object();
  Reader r(block, b);
  Outcome out;
  if (sub == "spectrum") {
    out = run_spectrum(ctx, r);
  } else if (sub == "rates") {
    out = run_rates(ctx, r);
  } else if (sub == "sweet-scan") {
    out = run_sweet_scan(ctx, r);
  } else if (sub == "sweet-trace") {
    out = run_sweet_trace(ctx, r);
  } else if (sub == "gap-check") {
    out = run_gap_check(ctx, r);
  } else if (sub == "gate") {
    const std::vector<std::string> protos{"rabi", "sqrt-x", "x", "s", "t", "ramp"};
    if (std::find(protos.begin(), protos.end(), ro.protocol) == protos.end())
      throw SchemaError("--protocol: expected one of rabi, sqrt-x, x, s, t, ramp");
    out = run_gate(ctx, r, ro.protocol);
  } else if (sub == "two-qubit") {
    out = run_two_qubit(ctx, r);
  } else {
    out = run_limits(ctx, r);
  }
  RunConfig echo_cfg = cfg;
  echo_cfg.seed = ctx.seed;
  Envelope env;
  env.document = json{{"schema_version", kSchemaVersion},
                      {"config", config_echo(echo_cfg, sub, out.echo_block)},
                      {"provenance", provenance(ctx.seed, sub)},
                      {"payload", out.payload},
                      {"warnings", out.warnings.to_json()}};
  if (sub == "gate") env.document["provenance"]["protocol"] = ro.protocol;
  env.csv = out.csv;
  env.failed_points = out.failed_points;
  env.first_failure = out.first_failure;
  return env;
}

// Writes through a temporary file in the target directory and renames it
// into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) {
      f.close();
      std::filesystem::remove(tmp);
      throw Error("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

struct OutputPaths {
  std::filesystem::path envelope;
  std::filesystem::path csv;
};

// The envelope goes to --out; a CSV payload sits next to it with a .csv
// extension. An --out ending in .csv moves the envelope to .json.
inline OutputPaths output_paths(const std::filesystem::path& out) {
  OutputPaths p;
  if (out.extension() == ".csv") {
    p.csv = out;
    p.envelope = out;
    p.envelope.replace_extension(".json");
  } else {
    p.envelope = out;
    p.csv = out;
    p.csv.replace_extension(".csv");
  }
  return p;
}

}  // namespace sweetfloq::cli
