#include "diffnet/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "diffnet/errors.hpp"
#include "diffnet/greens_kernel.hpp"
#include "diffnet/util.hpp"

namespace diffnet {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Placement generators

namespace {

constexpr int kMaxPlacementAttempts = 1000000;

bool far_enough(const Vec3& p, const std::vector<Vec3>& pts, const std::vector<Vec3>& avoid,
                double min_sep) {
  const double m2 = min_sep * min_sep;
  for (const Vec3& q : pts)
    if ((p - q).squaredNorm() <= m2) return false;
  for (const Vec3& q : avoid)
    if ((p - q).squaredNorm() <= m2) return false;
  return true;
}

}  // namespace

std::vector<Vec3> place_slab(int count, double r1_min, double r1_max, const DomainSpec& domain,
                             double R, std::uint64_t seed, const std::vector<Vec3>& avoid) {
  if (count < 0) throw ValidationError("placement count must be nonnegative");
  if (!(r1_min < r1_max)) throw ValidationError("slab needs r1_min < r1_max");
  if (r1_min >= domain.L || r1_max <= -domain.L)
    throw ValidationError("slab does not intersect the domain");
  std::vector<Vec3> pts;
  pts.reserve(count);
  std::mt19937_64 rng(seed);
  const double lim = domain.L - R;  // cells must sit strictly inside the ball
  auto draw = [&](double lo, double hi) {
    return lo + (hi - lo) * canonical_double(rng());
  };
  for (int attempt = 0; static_cast<int>(pts.size()) < count; ++attempt) {
    if (attempt >= kMaxPlacementAttempts)
      throw ValidationError("slab placement failed: attempt budget exhausted at " +
                            std::to_string(pts.size()) + " of " + std::to_string(count));
    Vec3 p(draw(r1_min, r1_max), draw(-lim, lim), draw(-lim, lim));
    if (p.norm() >= lim) continue;
    if (!far_enough(p, pts, avoid, 2.0 * R)) continue;
    pts.push_back(p);
  }
  return pts;
}

std::vector<Vec3> place_ball(int count, double radius, const DomainSpec& domain, double R,
                             std::uint64_t seed, const std::vector<Vec3>& avoid) {
  if (count < 0) throw ValidationError("placement count must be nonnegative");
  if (!(radius > 0) || radius + R >= domain.L)
    throw ValidationError("ball placement radius out of range (need 0 < radius < L - R)");
  std::vector<Vec3> pts;
  pts.reserve(count);
  std::mt19937_64 rng(seed);
  auto draw = [&]() { return radius * (2.0 * canonical_double(rng()) - 1.0); };
  for (int attempt = 0; static_cast<int>(pts.size()) < count; ++attempt) {
    if (attempt >= kMaxPlacementAttempts)
      throw ValidationError("ball placement failed: attempt budget exhausted at " +
                            std::to_string(pts.size()) + " of " + std::to_string(count));
    Vec3 p(draw(), draw(), draw());
    if (p.norm() > radius) continue;
    if (!far_enough(p, pts, avoid, 2.0 * R)) continue;
    pts.push_back(p);
  }
  return pts;
}

std::vector<Vec3> place_shell(int count, double radius, const DomainSpec& domain, double R) {
  if (count < 0) throw ValidationError("placement count must be nonnegative");
  if (!(radius > 0) || radius + R >= domain.L)
    throw ValidationError("shell radius out of range (need 0 < radius < L - R)");
  std::vector<Vec3> pts;
  pts.reserve(count);
  if (count == 1) {
    pts.emplace_back(0, 0, radius);
    return pts;
  }
  if (count == 2) {
    pts.emplace_back(0, 0, radius);
    pts.emplace_back(0, 0, -radius);
    return pts;
  }
  // Offset Fibonacci lattice: near-uniform spacing including the polar caps.
  constexpr double kOffset = 1.5;
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - 2.0 * (k + kOffset) / (count - 1 + 2.0 * kOffset);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * k;
    pts.emplace_back(radius * rho * std::cos(phi), radius * rho * std::sin(phi), radius * z);
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail("unknown key \"" + it.key() + "\" in " + ctx);
  }
}

double as_num(const json& v, const std::string& ctx) {
  if (!v.is_number()) fail(ctx + " must be a number");
  return v.get<double>();
}

double get_num(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.contains(key)) fail(ctx + " is missing \"" + std::string(key) + "\"");
  return as_num(obj.at(key), ctx + "." + key);
}

std::string get_str(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.contains(key) || !obj.at(key).is_string())
    fail(ctx + " needs a string \"" + std::string(key) + "\"");
  return obj.at(key).get<std::string>();
}

Vec3 as_vec3(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 3) fail(ctx + " must be a 3-element array");
  return Vec3(as_num(v[0], ctx), as_num(v[1], ctx), as_num(v[2], ctx));
}

std::vector<double> as_num_array(const json& v, const std::string& ctx) {
  if (!v.is_array()) fail(ctx + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(as_num(e, ctx));
  return out;
}

ParamPreset parse_params(const json* j) {
  ParamPreset p = paper_sec4_preset();
  if (!j) return p;
  if (!j->is_object()) fail("params must be an object");
  check_keys(*j, {"preset", "signal", "sender", "receiver", "R"}, "params");
  if (j->contains("preset")) {
    try {
      p = named_preset(j->at("preset").get<std::string>());
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  auto override_num = [&](const json& o, const char* key, double& slot, const std::string& ctx) {
    if (o.contains(key)) slot = as_num(o.at(key), ctx + "." + key);
  };
  if (j->contains("signal")) {
    const json& s = j->at("signal");
    check_keys(s, {"alpha", "a_u", "gamma_u"}, "params.signal");
    override_num(s, "alpha", p.signal.alpha, "params.signal");
    override_num(s, "a_u", p.signal.a_u, "params.signal");
    override_num(s, "gamma_u", p.signal.gamma_u, "params.signal");
  }
  if (j->contains("sender")) {
    const json& s = j->at("sender");
    check_keys(s, {"a_s", "gamma_s"}, "params.sender");
    override_num(s, "a_s", p.sender.a_s, "params.sender");
    override_num(s, "gamma_s", p.sender.gamma_s, "params.sender");
  }
  if (j->contains("receiver")) {
    const json& r = j->at("receiver");
    check_keys(r, {"a_r1", "a_r2", "gamma_r1", "gamma_r2", "K_1", "K_2", "K_u"}, "params.receiver");
    override_num(r, "a_r1", p.receiver.a_r1, "params.receiver");
    override_num(r, "a_r2", p.receiver.a_r2, "params.receiver");
    override_num(r, "gamma_r1", p.receiver.gamma_r1, "params.receiver");
    override_num(r, "gamma_r2", p.receiver.gamma_r2, "params.receiver");
    override_num(r, "K_1", p.receiver.K_1, "params.receiver");
    override_num(r, "K_2", p.receiver.K_2, "params.receiver");
    override_num(r, "K_u", p.receiver.K_u, "params.receiver");
  }
  if (j->contains("R")) p.R = as_num(j->at("R"), "params.R");
  return p;
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text, const ConfigOverrides& ov) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");

  try {
    check_keys(j,
               {"schema", "name", "description", "model", "experiment", "domain", "params",
                "cells", "placement", "initial", "solver", "t_end", "output_dt", "analyses",
                "sweep", "rng_seed", "csv_cells", "fit_window"},
               "top level");
    if (j.contains("description") && !j.at("description").is_string())
      fail("description must be a string");
    if (!j.contains("schema") || !j.at("schema").is_number_integer() ||
        j.at("schema").get<int>() != 1)
      fail("\"schema\" must be the integer 1");

    if (ov.seed) j["rng_seed"] = *ov.seed;
    if (ov.model) j["model"] = *ov.model;

    ScenarioConfig c;
    c.canonical_json = j.dump();

    c.name = get_str(j, "name", "top level");
    if (c.name.empty()) fail("name must be nonempty");
    for (char ch : c.name)
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_')
        fail("name may only contain letters, digits, '-' and '_'");

    if (j.contains("model")) c.model = get_str(j, "model", "top level");
    if (c.model != "reduced" && c.model != "full" && c.model != "both")
      fail("model must be reduced, full or both");
    if (j.contains("experiment")) c.experiment = get_str(j, "experiment", "top level");
    if (c.experiment != "coupled" && c.experiment != "field_decay")
      fail("experiment must be coupled or field_decay");

    if (!j.contains("domain") || !j.at("domain").is_object()) fail("domain object is required");
    check_keys(j.at("domain"), {"L", "D"}, "domain");
    c.domain.L = get_num(j.at("domain"), "L", "domain");
    c.domain.D = get_num(j.at("domain"), "D", "domain");
    if (!(c.domain.L > 0) || !(c.domain.D > 0)) fail("domain.L and domain.D must be positive");

    c.params = parse_params(j.contains("params") ? &j.at("params") : nullptr);

    const bool has_cells = j.contains("cells");
    const bool has_placement = j.contains("placement");
    if (has_cells == has_placement) fail("exactly one of \"cells\" or \"placement\" is required");
    if (has_cells) {
      const json& arr = j.at("cells");
      if (!arr.is_array() || arr.empty()) fail("cells must be a nonempty array");
      for (const auto& e : arr) {
        if (!e.is_object()) fail("cells entries must be objects");
        check_keys(e, {"kind", "position"}, "cells[]");
        CellSpec cell;
        const std::string kind = get_str(e, "kind", "cells[]");
        if (kind == "sender")
          cell.kind = CellKind::Sender;
        else if (kind == "receiver")
          cell.kind = CellKind::Receiver;
        else
          fail("cell kind must be sender or receiver");
        if (!e.contains("position")) fail("cells[] needs a position");
        cell.position = as_vec3(e.at("position"), "cells[].position");
        cell.R = c.params.R;
        c.cells.push_back(cell);
      }
    } else {
      const json& pl = j.at("placement");
      if (!pl.is_object()) fail("placement must be an object");
      check_keys(pl, {"senders", "receivers"}, "placement");
      if (!pl.contains("senders") || !pl.at("senders").is_object())
        fail("placement.senders object is required");
      const json& s = pl.at("senders");
      check_keys(s, {"mode", "count", "r1_min", "r1_max", "radius"}, "placement.senders");
      const std::string mode = get_str(s, "mode", "placement.senders");
      c.placement.count = static_cast<int>(get_num(s, "count", "placement.senders"));
      if (c.placement.count < 0) fail("placement count must be nonnegative");
      if (mode == "slab") {
        c.placement.mode = PlacementSpec::Mode::Slab;
        c.placement.r1_min = get_num(s, "r1_min", "placement.senders");
        c.placement.r1_max = get_num(s, "r1_max", "placement.senders");
      } else if (mode == "sphere_surface") {
        c.placement.mode = PlacementSpec::Mode::SphereSurface;
        c.placement.radius = get_num(s, "radius", "placement.senders");
      } else if (mode == "ball") {
        c.placement.mode = PlacementSpec::Mode::Ball;
        c.placement.radius = get_num(s, "radius", "placement.senders");
      } else {
        fail("placement mode must be slab, sphere_surface or ball");
      }
      if (pl.contains("receivers")) {
        const json& rec = pl.at("receivers");
        if (!rec.is_array()) fail("placement.receivers must be an array of positions");
        for (const auto& e : rec) c.receiver_positions.push_back(as_vec3(e, "placement.receivers[]"));
      }
    }

    if (j.contains("initial")) {
      const json& ini = j.at("initial");
      check_keys(ini, {"sender", "receiver", "u"}, "initial");
      if (ini.contains("sender")) {
        c.init_sender = as_num_array(ini.at("sender"), "initial.sender");
        if (c.init_sender.size() != 1) fail("initial.sender must have 1 entry");
      }
      if (ini.contains("receiver")) {
        c.init_receiver = as_num_array(ini.at("receiver"), "initial.receiver");
        if (c.init_receiver.size() != 2) fail("initial.receiver must have 2 entries");
      }
      if (ini.contains("u")) {
        if (ini.at("u").is_number())
          c.init_u = {ini.at("u").get<double>()};
        else
          c.init_u = as_num_array(ini.at("u"), "initial.u");
      }
    }

    if (j.contains("solver")) {
      const json& sol = j.at("solver");
      check_keys(sol, {"reduced", "full"}, "solver");
      if (sol.contains("reduced")) {
        const json& r = sol.at("reduced");
        check_keys(r, {"method", "atol", "rtol", "dt"}, "solver.reduced");
        if (r.contains("method")) {
          const std::string m = get_str(r, "method", "solver.reduced");
          if (m == "adaptive")
            c.reduced_opts.method = ReducedOptions::Method::Adaptive;
          else if (m == "rk4")
            c.reduced_opts.method = ReducedOptions::Method::FixedRK4;
          else
            fail("solver.reduced.method must be adaptive or rk4");
        }
        if (r.contains("atol")) c.reduced_opts.atol = as_num(r.at("atol"), "solver.reduced.atol");
        if (r.contains("rtol")) c.reduced_opts.rtol = as_num(r.at("rtol"), "solver.reduced.rtol");
        if (r.contains("dt")) c.reduced_opts.dt = as_num(r.at("dt"), "solver.reduced.dt");
        if (!(c.reduced_opts.atol > 0) || !(c.reduced_opts.rtol > 0) || !(c.reduced_opts.dt > 0))
          fail("solver.reduced settings must be positive");
      }
      if (sol.contains("full")) {
        const json& f = sol.at("full");
        check_keys(f, {"h", "dt", "cg_tol", "cg_maxit", "mass_audit"}, "solver.full");
        if (f.contains("h")) c.full_opts.h = as_num(f.at("h"), "solver.full.h");
        if (f.contains("dt")) c.full_opts.dt = as_num(f.at("dt"), "solver.full.dt");
        if (f.contains("cg_tol")) c.full_opts.cg_tol = as_num(f.at("cg_tol"), "solver.full.cg_tol");
        if (f.contains("cg_maxit"))
          c.full_opts.cg_maxit = static_cast<int>(as_num(f.at("cg_maxit"), "solver.full.cg_maxit"));
        if (f.contains("mass_audit")) {
          if (!f.at("mass_audit").is_boolean()) fail("solver.full.mass_audit must be a boolean");
          c.full_opts.mass_audit = f.at("mass_audit").get<bool>();
        }
        if (!(c.full_opts.h > 0) || !(c.full_opts.dt > 0) || !(c.full_opts.cg_tol > 0) ||
            c.full_opts.cg_maxit < 1)
          fail("solver.full settings must be positive");
      }
    }

    c.t_end = get_num(j, "t_end", "top level");
    c.output_dt = get_num(j, "output_dt", "top level");
    if (!(c.t_end > 0) || !(c.output_dt > 0) || c.output_dt > c.t_end)
      fail("need 0 < output_dt <= t_end");

    if (j.contains("analyses")) {
      if (!j.at("analyses").is_array()) fail("analyses must be an array");
      for (const auto& a : j.at("analyses")) {
        if (!a.is_string()) fail("analyses entries must be strings");
        const std::string s = a.get<std::string>();
        if (s != "error_table" && s != "decay_fit" && s != "toggle_report" && s != "gain_export")
          fail("unknown analysis \"" + s + "\"");
        c.analyses.push_back(s);
      }
    }

    if (j.contains("sweep")) {
      const json& sw = j.at("sweep");
      check_keys(sw, {"gammas"}, "sweep");
      c.sweep_gammas = as_num_array(sw.contains("gammas") ? sw.at("gammas") : json::array(),
                                    "sweep.gammas");
      if (c.sweep_gammas.empty()) fail("sweep.gammas must be nonempty");
      for (double g : c.sweep_gammas)
        if (!(g > 0)) fail("sweep.gammas entries must be positive");
    }

    if (j.contains("rng_seed")) {
      if (!j.at("rng_seed").is_number_integer() && !j.at("rng_seed").is_number_unsigned())
        fail("rng_seed must be an integer");
      c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
      c.has_seed = true;
    }

    if (j.contains("csv_cells")) {
      for (const auto& e : j.at("csv_cells")) {
        if (!e.is_number_integer()) fail("csv_cells entries must be integers");
        const int id = e.get<int>();
        if (id < 0) fail("csv_cells entries must be nonnegative");
        c.csv_cells.push_back(id);
      }
    }

    if (j.contains("fit_window")) {
      c.fit_window = as_num(j.at("fit_window"), "fit_window");
      if (!(c.fit_window > 0) || c.fit_window > 1) fail("fit_window must lie in (0, 1]");
    }

    // Cross-field rules.
    const bool stochastic = c.placement.mode == PlacementSpec::Mode::Slab ||
                            c.placement.mode == PlacementSpec::Mode::Ball;
    if (stochastic && !c.has_seed) fail("rng_seed is required with a stochastic placement");
    if (c.experiment == "field_decay" && c.model != "full")
      fail("field_decay experiments require model = full");
    for (const std::string& a : c.analyses) {
      if (a == "decay_fit" && c.experiment != "field_decay")
        fail("decay_fit only applies to field_decay experiments");
      if (a == "error_table" && c.experiment != "coupled")
        fail("error_table only applies to coupled experiments");
      if (a == "toggle_report" && c.experiment != "coupled")
        fail("toggle_report only applies to coupled experiments");
    }
    return c;
  } catch (const json::exception& e) {
    fail(std::string("malformed value: ") + e.what());
  }
}

ScenarioConfig load_config(const std::filesystem::path& path, const ConfigOverrides& ov) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), ov);
}

SystemSpec build_system(const ScenarioConfig& config) {
  SystemSpec spec;
  spec.domain = config.domain;
  spec.signal = config.params.signal;
  spec.sender_params = config.params.sender;
  spec.receiver_params = config.params.receiver;

  if (!config.cells.empty()) {
    spec.cells = config.cells;
  } else {
    std::vector<Vec3> senders;
    switch (config.placement.mode) {
      case PlacementSpec::Mode::Slab:
        senders = place_slab(config.placement.count, config.placement.r1_min,
                             config.placement.r1_max, config.domain, config.params.R,
                             config.rng_seed, config.receiver_positions);
        break;
      case PlacementSpec::Mode::SphereSurface:
        senders = place_shell(config.placement.count, config.placement.radius, config.domain,
                              config.params.R);
        break;
      case PlacementSpec::Mode::Ball:
        senders = place_ball(config.placement.count, config.placement.radius, config.domain,
                             config.params.R, config.rng_seed, config.receiver_positions);
        break;
      case PlacementSpec::Mode::None:
        throw ConfigError("config has neither cells nor a placement");
    }
    spec.cells.reserve(senders.size() + config.receiver_positions.size());
    for (const Vec3& p : senders) spec.cells.push_back({p, CellKind::Sender, config.params.R});
    for (const Vec3& p : config.receiver_positions)
      spec.cells.push_back({p, CellKind::Receiver, config.params.R});
  }

  spec.initial_state.reserve(spec.cells.size());
  for (const CellSpec& cell : spec.cells)
    spec.initial_state.push_back(cell.kind == CellKind::Sender ? config.init_sender
                                                               : config.init_receiver);
  spec.initial_u.assign(spec.cells.size(), 0.0);
  if (config.init_u.size() == 1) {
    spec.initial_u.assign(spec.cells.size(), config.init_u[0]);
  } else if (!config.init_u.empty()) {
    if (config.init_u.size() != spec.cells.size())
      throw ValidationError("initial.u length does not match the cell count");
    spec.initial_u = config.init_u;
  }

  if (spec.cells.empty()) throw ValidationError("scenario needs at least one cell");
  for (int id : config.csv_cells)
    if (id >= static_cast<int>(spec.cells.size()))
      throw ValidationError("csv_cells index " + std::to_string(id) + " out of range");

  ValidationReport report = validate(spec);
  if (!report.ok()) {
    std::string msg = "invalid system:";
    for (const ValidationIssue& issue : report.issues)
      msg += "\n  [" + issue.code + "] " + issue.message;
    throw ValidationError(msg);
  }
  return spec;
}

std::uint64_t config_hash(const ScenarioConfig& config) {
  return fnv1a64(config.canonical_json);
}

std::string output_dir_name(const ScenarioConfig& config) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  return config.name + "-" + hex;
}

// ---------------------------------------------------------------------------
// Output writers

void write_trajectory_csv(const Trajectory& traj, const std::vector<int>& cells,
                          const std::filesystem::path& path) {
  std::vector<int> ids(cells);
  if (ids.empty())
    for (std::size_t i = 0; i < traj.num_cells(); ++i) ids.push_back(static_cast<int>(i));

  std::string out = "time,cell_id,kind,species,value\n";
  out.reserve(out.size() + traj.times.size() * ids.size() * 40);
  const bool has_field = traj.has_field_samples();
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const std::string t = format_double(traj.times[k]);
    for (int id : ids) {
      const std::size_t i = static_cast<std::size_t>(id);
      const bool sender = traj.kinds[i] == CellKind::Sender;
      const char* kind = sender ? "sender" : "receiver";
      auto row = [&](const char* species, double value) {
        out += t;
        out += ',';
        out += std::to_string(id);
        out += ',';
        out += kind;
        out += ',';
        out += species;
        out += ',';
        out += format_double(value);
        out += '\n';
      };
      if (sender) {
        row("LuxI", traj.state_at(k, i, 0));
      } else {
        row("LacI", traj.state_at(k, i, 0));
        row("TetR", traj.state_at(k, i, 1));
      }
      row("u", traj.signals[k][static_cast<Eigen::Index>(i)]);
      if (has_field) row("v", traj.field_samples[k][static_cast<Eigen::Index>(i)]);
    }
  }
  atomic_write_file(path, out);
}

void write_error_table_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::string out = "gamma,eps_u,eps_v,err_x21,err_x22\n";
  for (const SweepRow& r : rows) {
    out += format_double(r.gamma);
    out += ',';
    out += format_double(r.eps_u);
    out += ',';
    out += format_double(r.eps_v);
    out += ',';
    out += format_double(r.err_x21);
    out += ',';
    out += format_double(r.err_x22);
    out += '\n';
  }
  atomic_write_file(path, out);
}

// ---------------------------------------------------------------------------
// Scenario execution

namespace {

json time_scales_json(const SystemSpec& spec) {
  const TimeScales ts = time_scales(spec);
  return {{"tau_v", ts.tau_v}, {"tau_u", ts.tau_u},       {"tau_x", ts.tau_x},
          {"eps_u", ts.eps_u}, {"eps_v", ts.eps_v},       {"separated", ts.separated}};
}

json toggle_json(const SystemSpec& spec, const Trajectory& traj, double t) {
  json out = json::object();
  for (std::size_t i = 0; i < spec.cells.size(); ++i) {
    if (spec.cells[i].kind != CellKind::Receiver) continue;
    out[std::to_string(i)] = to_string(classify_toggle(traj, i, t));
  }
  return out;
}

std::string system_digest(const SystemSpec& spec) {
  // Canonical serialization of the resolved system (placements included) so
  // the manifest can prove which geometry actually ran.
  json j;
  j["domain"] = {{"L", spec.domain.L}, {"D", spec.domain.D}};
  j["signal"] = {{"alpha", spec.signal.alpha},
                 {"a_u", spec.signal.a_u},
                 {"gamma_u", spec.signal.gamma_u}};
  j["sender"] = {{"a_s", spec.sender_params.a_s}, {"gamma_s", spec.sender_params.gamma_s}};
  j["receiver"] = {{"a_r1", spec.receiver_params.a_r1},     {"a_r2", spec.receiver_params.a_r2},
                   {"gamma_r1", spec.receiver_params.gamma_r1},
                   {"gamma_r2", spec.receiver_params.gamma_r2},
                   {"K_1", spec.receiver_params.K_1},       {"K_2", spec.receiver_params.K_2},
                   {"K_u", spec.receiver_params.K_u}};
  json cells = json::array();
  for (const CellSpec& c : spec.cells)
    cells.push_back({{"kind", c.kind == CellKind::Sender ? "sender" : "receiver"},
                     {"position", {c.position[0], c.position[1], c.position[2]}},
                     {"R", c.R}});
  j["cells"] = std::move(cells);
  j["initial_state"] = spec.initial_state;
  j["initial_u"] = spec.initial_u;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(j.dump())));
  return hex;
}

void write_receiver_overlay(const Trajectory& red, const Trajectory& full, std::size_t receiver,
                            const std::filesystem::path& path) {
  std::string out = "# time LacI_reduced TetR_reduced LacI_full TetR_full\n";
  const std::size_t n = std::min(red.times.size(), full.times.size());
  for (std::size_t k = 0; k < n; ++k) {
    out += format_double(red.times[k]);
    out += ' ';
    out += format_double(red.state_at(k, receiver, 0));
    out += ' ';
    out += format_double(red.state_at(k, receiver, 1));
    out += ' ';
    out += format_double(full.state_at(k, receiver, 0));
    out += ' ';
    out += format_double(full.state_at(k, receiver, 1));
    out += '\n';
  }
  atomic_write_file(path, out);
}

bool wants(const ScenarioConfig& c, const char* analysis) {
  return std::find(c.analyses.begin(), c.analyses.end(), analysis) != c.analyses.end();
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_root,
                       RunMode mode) {
  const auto wall_start = std::chrono::steady_clock::now();
  if (mode == RunMode::Sweep && config.experiment != "coupled")
    throw ConfigError("sweep only applies to coupled experiments");
  const SystemSpec spec = build_system(config);

  const std::filesystem::path dir = out_root / output_dir_name(config);
  std::filesystem::create_directories(dir);
  std::vector<std::string> outputs;
  auto note = [&outputs](const std::string& f) { outputs.push_back(f); };

  json summary;
  summary["name"] = config.name;
  summary["model"] = config.model;
  summary["experiment"] = config.experiment;
  summary["config_hash"] = output_dir_name(config).substr(config.name.size() + 1);
  summary["cells"] = spec.cells.size();
  try {
    summary["time_scales"] = time_scales_json(spec);
  } catch (const std::invalid_argument&) {
    // degenerate parameter sets (no positive degradation) have no eps values
  }

  const bool analyses_on = mode == RunMode::Run || mode == RunMode::Analyze;
  GainMatrix gain;
  bool gain_ready = false;
  auto ensure_gain = [&]() {
    if (gain_ready) return;
    const GreenMatrix green = assemble_green(spec.domain, spec.cells);
    gain = assemble_gain(green, spec.signal, cell_volume(spec.cells.front()));
    gain_ready = true;
  };

  if (mode == RunMode::Gain) {
    ensure_gain();
    export_matrix_csv(gain.entries, dir / "gain.csv");
    note("gain.csv");
    summary["gain_dim"] = gain.entries.rows();
  } else if (config.experiment == "field_decay") {
    // Frozen-cell relaxation: u is pinned at its initial values, the field
    // starts from zero, and we track the gap to the static profile v*.
    FullOptions fo = config.full_opts;
    fo.freeze_cells = true;
    const Eigen::VectorXd u0 = Eigen::Map<const Eigen::VectorXd>(
        spec.initial_u.data(), static_cast<Eigen::Index>(spec.initial_u.size()));
    const Eigen::VectorXd vstar = solve_static_frozen_u(spec, fo, u0);

    FullSim sim(spec, fo);
    const double per_f = config.output_dt / fo.dt;
    const long per = std::lround(per_f);
    if (per < 1 || std::abs(per_f - per) > 1e-6 * per_f)
      throw ConfigError("output_dt must be an integer multiple of solver.full.dt");
    const long n_out = std::lround(config.t_end / config.output_dt);

    std::vector<double> times{0.0}, norms{field_l2(sim.grid(), sim.field() - vstar)};
    for (long k = 1; k <= n_out; ++k) {
      for (long s = 0; s < per; ++s) sim.step();
      times.push_back(sim.t());
      norms.push_back(field_l2(sim.grid(), sim.field() - vstar));
    }

    std::string dat = "# time norm\n";
    for (std::size_t k = 0; k < times.size(); ++k)
      dat += format_double(times[k]) + " " + format_double(norms[k]) + "\n";
    atomic_write_file(dir / "decay_norm.dat", dat);
    note("decay_norm.dat");

    const double reference =
        std::numbers::pi * std::numbers::pi * spec.domain.D / (spec.domain.L * spec.domain.L);
    const DecayFit fit = fit_decay_rate(times, norms, config.fit_window);
    summary["decay"] = {{"rate", fit.rate},
                        {"r2", fit.r2},
                        {"reference_rate", reference},
                        {"rate_over_reference", fit.rate / reference}};
    if (analyses_on && wants(config, "decay_fit")) {
      json out = {{"rate", fit.rate},           {"r2", fit.r2},
                  {"t_begin", fit.t_begin},     {"t_end", fit.t_end},
                  {"reference_rate", reference}, {"rate_over_reference", fit.rate / reference}};
      atomic_write_file(dir / "decay_fit.json", out.dump(2) + "\n");
      note("decay_fit.json");
    }
    summary["mass_residual"] = sim.max_mass_residual();
  } else if ((mode == RunMode::Sweep || !config.sweep_gammas.empty()) && mode != RunMode::Simulate) {
    if (config.sweep_gammas.empty()) throw ConfigError("sweep requires sweep.gammas");
    const SweepResult sr = epsilon_sweep(spec, config.sweep_gammas, config.full_opts,
                                         config.reduced_opts, config.t_end, config.output_dt);
    write_error_table_csv(sr.rows, dir / "error_table.csv");
    note("error_table.csv");
    json rows = json::array();
    for (const SweepRow& r : sr.rows)
      rows.push_back({{"gamma", r.gamma},
                      {"eps_u", r.eps_u},
                      {"eps_v", r.eps_v},
                      {"err_x21", r.err_x21},
                      {"err_x22", r.err_x22}});
    summary["sweep"] = {{"rows", rows},
                        {"slope_x21", sr.slope_x21},
                        {"slope_x22", sr.slope_x22},
                        {"pooled_slope", sr.pooled_slope}};
  } else {
    const bool want_reduced = config.model == "reduced" || config.model == "both";
    const bool want_full = config.model == "full" || config.model == "both";
    Trajectory red, full;
    if (want_reduced) {
      ensure_gain();
      red = simulate_reduced(spec, gain, config.t_end, config.output_dt, config.reduced_opts);
    }
    if (want_full) full = simulate_full(spec, config.full_opts, config.t_end, config.output_dt);

    if (mode != RunMode::Analyze) {
      if (want_reduced) {
        write_trajectory_csv(red, config.csv_cells, dir / "trajectory_reduced.csv");
        note("trajectory_reduced.csv");
      }
      if (want_full) {
        write_trajectory_csv(full, config.csv_cells, dir / "trajectory_full.csv");
        note("trajectory_full.csv");
      }
      if (want_reduced && want_full && num_receivers(spec) > 0) {
        write_receiver_overlay(red, full, num_senders(spec), dir / "receiver_overlay.dat");
        note("receiver_overlay.dat");
      }
    }

    if (analyses_on) {
      if (wants(config, "gain_export")) {
        ensure_gain();
        export_matrix_csv(gain.entries, dir / "gain.csv");
        note("gain.csv");
      }
      if (wants(config, "toggle_report")) {
        json rep = json::object();
        if (want_reduced) rep["reduced"] = toggle_json(spec, red, config.t_end);
        if (want_full) rep["full"] = toggle_json(spec, full, config.t_end);
        atomic_write_file(dir / "toggle_report.json", rep.dump(2) + "\n");
        note("toggle_report.json");
        summary["toggle"] = rep;
      }
      if (wants(config, "error_table")) {
        if (!(want_reduced && want_full))
          throw ConfigError("error_table needs model = both (or a sweep)");
        const TimeScales ts = time_scales(spec);
        SweepRow row;
        row.gamma = std::max({spec.sender_params.gamma_s, spec.receiver_params.gamma_r1,
                              spec.receiver_params.gamma_r2});
        row.eps_u = ts.eps_u;
        row.eps_v = ts.eps_v;
        for (std::size_t i = 0; i < spec.cells.size(); ++i) {
          if (spec.cells[i].kind != CellKind::Receiver) continue;
          row.err_x21 = std::max(row.err_x21, max_abs_error(full, red, {i, 0}));
          row.err_x22 = std::max(row.err_x22, max_abs_error(full, red, {i, 1}));
        }
        write_error_table_csv({row}, dir / "error_table.csv");
        note("error_table.csv");
        summary["errors"] = {{"err_x21", row.err_x21}, {"err_x22", row.err_x22}};
      }
    }
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  summary["wall_seconds"] = wall;
  atomic_write_file(dir / "summary.json", summary.dump(2) + "\n");
  note("summary.json");

  json manifest;
  manifest["schema"] = 1;
  manifest["name"] = config.name;
  manifest["config_hash"] = summary["config_hash"];
  manifest["system_hash"] = system_digest(spec);
  manifest["versions"] = {{"diffnet", kDiffnetVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                        std::to_string(EIGEN_MINOR_VERSION)},
                          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                          {"compiler", __VERSION__}};
  manifest["settings"] = json::parse(config.canonical_json);
  manifest["outputs"] = outputs;
  manifest["wall_seconds"] = wall;
  atomic_write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  RunResult res;
  res.out_dir = dir;
  res.summary_json = summary.dump(2) + "\n";
  return res;
}

}  // namespace diffnet
