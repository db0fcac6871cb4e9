#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "diffnet/scenario.hpp"

using namespace diffnet;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kTwoCellConfig = R"({
  "schema": 1,
  "name": "pair",
  "model": "reduced",
  "domain": {"L": 20.0, "D": 20000.0},
  "cells": [
    {"kind": "sender", "position": [0.0, 0.0, 0.0]},
    {"kind": "receiver", "position": [15.0, 0.0, 0.0]}
  ],
  "t_end": 10.0,
  "output_dt": 5.0
})";

// Parses kTwoCellConfig with one top-level field replaced (or added).
ScenarioConfig parse_with(const std::string& key, const json& value) {
  json j = json::parse(kTwoCellConfig);
  j[key] = value;
  return parse_config(j.dump());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("diffnet_scenario_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DIFFNET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

double min_pair_distance(const std::vector<Vec3>& pts) {
  double best = 1e30;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::min(best, (pts[i] - pts[j]).norm());
  return best;
}

}  // namespace

TEST_CASE("slab placement") {
  const DomainSpec dom{300.0, 2e4};
  const double R = 1.5;
  const auto pts = place_slab(200, -20.0, 0.0, dom, R, 1001);
  REQUIRE(pts.size() == 200);
  for (const Vec3& p : pts) {
    CHECK(p[0] >= -20.0);
    CHECK(p[0] <= 0.0);
    CHECK(std::abs(p[1]) <= dom.L - R);
    CHECK(std::abs(p[2]) <= dom.L - R);
    CHECK(p.norm() < dom.L - R);
  }
  CHECK(min_pair_distance(pts) > 2.0 * R);

  SUBCASE("same seed reproduces, another seed differs") {
    const auto again = place_slab(200, -20.0, 0.0, dom, R, 1001);
    REQUIRE(again.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK((pts[i] - again[i]).norm() == 0.0);
    const auto other = place_slab(200, -20.0, 0.0, dom, R, 1002);
    CHECK((other[0] - pts[0]).norm() > 0.0);
  }
  SUBCASE("avoid positions are honored") {
    const std::vector<Vec3> avoid{{-10.0, 0.0, 0.0}};
    const auto kept = place_slab(150, -20.0, 0.0, dom, R, 7, avoid);
    for (const Vec3& p : kept) CHECK((p - avoid[0]).norm() > 2.0 * R);
  }
  SUBCASE("zero count") { CHECK(place_slab(0, -20.0, 0.0, dom, R, 1).empty()); }
  SUBCASE("impossible packing throws") {
    CHECK_THROWS_AS(place_slab(80, 0.0, 0.5, {4.0, 1.0}, 1.5, 9), ValidationError);
  }
  SUBCASE("inverted bounds throw") {
    CHECK_THROWS_AS(place_slab(5, 3.0, -3.0, dom, R, 9), ValidationError);
  }
}

TEST_CASE("spherical surface placement is a deterministic lattice") {
  const DomainSpec dom{300.0, 2e4};
  const double R = 1.5, r = 40.0;

  const auto one = place_shell(1, r, dom, R);
  REQUIRE(one.size() == 1);
  CHECK((one[0] - Vec3{0, 0, r}).norm() <= 1e-12);

  const auto two = place_shell(2, r, dom, R);
  REQUIRE(two.size() == 2);
  CHECK((two[0] - Vec3{0, 0, r}).norm() <= 1e-12);
  CHECK((two[1] - Vec3{0, 0, -r}).norm() <= 1e-12);

  const auto many = place_shell(100, r, dom, R);
  REQUIRE(many.size() == 100);
  for (const Vec3& p : many) CHECK(p.norm() == doctest::Approx(r).epsilon(1e-12));
  // lattice points keep a healthy fraction of the ideal equal-area spacing
  const double ideal = r * std::sqrt(4.0 * std::numbers::pi / 100.0);
  CHECK(min_pair_distance(many) >= 0.5 * ideal);
  // deterministic: no seed involved
  const auto again = place_shell(100, r, dom, R);
  for (std::size_t i = 0; i < many.size(); ++i) CHECK((many[i] - again[i]).norm() == 0.0);

  CHECK_THROWS_AS(place_shell(10, 299.0, dom, R), ValidationError);

  // the lattice itself is unconstrained; a surface too crowded for the 2R
  // separation is rejected when the resolved system is validated
  const ScenarioConfig crowded = parse_config(R"({
    "schema": 1, "name": "crowded-shell", "model": "reduced",
    "domain": {"L": 300.0, "D": 20000.0},
    "params": {"preset": "paper-sec4"},
    "placement": {"senders": {"mode": "sphere_surface", "count": 4000, "radius": 40.0},
                   "receivers": [[0.0, 0.0, 0.0]]},
    "t_end": 10.0, "output_dt": 5.0
  })");
  CHECK_THROWS_AS(build_system(crowded), ValidationError);
}

TEST_CASE("ball placement") {
  const DomainSpec dom{300.0, 2e4};
  const double R = 1.5, r = 40.0;
  const std::vector<Vec3> avoid{{0.0, 0.0, 0.0}};
  const auto pts = place_ball(500, r, dom, R, 1002, avoid);
  REQUIRE(pts.size() == 500);
  for (const Vec3& p : pts) {
    CHECK(p.norm() <= r);
    CHECK((p - avoid[0]).norm() > 2.0 * R);
  }
  CHECK(min_pair_distance(pts) > 2.0 * R);

  const auto again = place_ball(500, r, dom, R, 1002, avoid);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK((pts[i] - again[i]).norm() == 0.0);

  CHECK_THROWS_AS(place_ball(10, 299.5, dom, R, 1), ValidationError);
  CHECK_THROWS_AS(place_ball(4000, 10.0, dom, R, 1), ValidationError);
}

TEST_CASE("config parsing fills defaults") {
  const ScenarioConfig c = parse_config(kTwoCellConfig);
  CHECK(c.name == "pair");
  CHECK(c.model == "reduced");
  CHECK(c.experiment == "coupled");
  CHECK(c.domain.L == 20.0);
  CHECK(c.params.signal.alpha == 1.0);  // preset default
  CHECK(c.params.R == 1.5);
  REQUIRE(c.cells.size() == 2);
  CHECK(c.cells[0].kind == CellKind::Sender);
  CHECK(c.cells[1].position[0] == 15.0);
  CHECK(c.cells[1].R == 1.5);
  CHECK(c.init_sender == std::vector<double>{400.0});
  CHECK(c.init_receiver == std::vector<double>{300.0, 1.0});
  CHECK(c.init_u.empty());
  CHECK(c.t_end == 10.0);
  CHECK(c.output_dt == 5.0);
  CHECK(c.analyses.empty());
  CHECK_FALSE(c.has_seed);
  CHECK(c.fit_window == 0.6);
  CHECK(c.reduced_opts.method == ReducedOptions::Method::Adaptive);
  CHECK(c.full_opts.h == 1.0);
}

TEST_CASE("config parsing applies overrides into the canonical form") {
  ConfigOverrides ov;
  ov.seed = 42;
  ov.model = "full";
  const ScenarioConfig c = parse_config(kTwoCellConfig, ov);
  CHECK(c.model == "full");
  CHECK(c.has_seed);
  CHECK(c.rng_seed == 42);
  const ScenarioConfig base = parse_config(kTwoCellConfig);
  CHECK(config_hash(c) != config_hash(base));
}

TEST_CASE("config hash is insensitive to key order but sensitive to values") {
  const ScenarioConfig a = parse_config(kTwoCellConfig);

  // same document, shuffled key order
  json j = json::parse(kTwoCellConfig);
  std::string reordered = "{\"t_end\": 10.0, \"output_dt\": 5.0, \"name\": \"pair\", ";
  reordered += "\"model\": \"reduced\", \"domain\": {\"D\": 20000.0, \"L\": 20.0}, ";
  reordered += "\"cells\": " + j["cells"].dump() + ", \"schema\": 1}";
  const ScenarioConfig b = parse_config(reordered);
  CHECK(config_hash(a) == config_hash(b));
  CHECK(output_dir_name(a) == output_dir_name(b));

  const ScenarioConfig c = parse_with("t_end", 20.0);
  CHECK(config_hash(a) != config_hash(c));

  const std::string dir = output_dir_name(a);
  REQUIRE(dir.size() == std::string("pair-").size() + 16);
  CHECK(dir.substr(0, 5) == "pair-");
  for (char ch : dir.substr(5)) CHECK(std::isxdigit(static_cast<unsigned char>(ch)));
}

TEST_CASE("config parsing rejects malformed documents") {
  auto reject = [](const std::string& text) {
    CHECK_THROWS_AS(parse_config(text), ConfigError);
  };
  auto reject_mutation = [](const char* key, const json& value) {
    json j = json::parse(kTwoCellConfig);
    j[key] = value;
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
  };

  reject("not json at all");
  reject("[1, 2, 3]");
  reject("{\"name\": \"x\"}");  // missing schema and everything else

  reject_mutation("schema", 2);
  reject_mutation("bogus_key", 1);
  reject_mutation("name", "bad name with spaces");
  reject_mutation("model", "hybrid");
  reject_mutation("experiment", "unknown");
  reject_mutation("t_end", -5.0);
  reject_mutation("output_dt", 50.0);  // above t_end
  reject_mutation("analyses", json::array({"error_table", "spectrum"}));
  reject_mutation("sweep", json::object({{"gammas", json::array()}}));
  reject_mutation("sweep", json::object({{"gammas", json::array({0.1, -0.1})}}));
  reject_mutation("rng_seed", 1.5);
  reject_mutation("fit_window", 1.5);
  reject_mutation("csv_cells", json::array({-1}));
  reject_mutation("cells", json::array());
  reject_mutation("cells", json::array({json::object({{"kind", "ghost"},
                                                      {"position", {0.0, 0.0, 0.0}}})}));

  {
    json j = json::parse(kTwoCellConfig);
    j.erase("domain");
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
  }
  {
    json j = json::parse(kTwoCellConfig);
    j["solver"] = {{"reduced", {{"stepper", "euler"}}}};  // unknown nested key
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
  }
  {
    // both explicit cells and a generator
    json j = json::parse(kTwoCellConfig);
    j["placement"] = {{"senders", {{"mode", "ball"}, {"count", 3}, {"radius", 10.0}}}};
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
  }
  {
    // stochastic placement without a seed
    json j = json::parse(kTwoCellConfig);
    j.erase("cells");
    j["placement"] = {{"senders", {{"mode", "ball"}, {"count", 3}, {"radius", 10.0}}}};
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
    j["rng_seed"] = 5;
    CHECK_NOTHROW(parse_config(j.dump()));
  }
  {
    // experiment cross-rules
    json j = json::parse(kTwoCellConfig);
    j["experiment"] = "field_decay";
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);  // needs model = full
    j["model"] = "full";
    CHECK_NOTHROW(parse_config(j.dump()));
    j["analyses"] = {"error_table"};
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);  // coupled-only analysis
  }
  {
    json j = json::parse(kTwoCellConfig);
    j["analyses"] = {"decay_fit"};  // only meaningful for field_decay
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
  }
}

TEST_CASE("build_system resolves explicit cells and initial conditions") {
  json j = json::parse(kTwoCellConfig);
  j["initial"] = {{"sender", {250.0}}, {"receiver", {10.0, 40.0}}, {"u", 1.0}};
  const ScenarioConfig c = parse_config(j.dump());
  const SystemSpec spec = build_system(c);
  REQUIRE(spec.cells.size() == 2);
  CHECK(spec.cells[0].kind == CellKind::Sender);
  CHECK(spec.cells[0].R == 1.5);
  CHECK(spec.initial_state[0] == std::vector<double>{250.0});
  CHECK(spec.initial_state[1] == std::vector<double>{10.0, 40.0});
  CHECK(spec.initial_u == std::vector<double>{1.0, 1.0});  // broadcast
  CHECK(validate(spec).ok());
}

TEST_CASE("build_system runs the generator and appends receivers") {
  json j = json::parse(kTwoCellConfig);
  j.erase("cells");
  j["placement"] = {{"senders", {{"mode", "slab"}, {"count", 6}, {"r1_min", -8.0},
                                 {"r1_max", 0.0}}},
                    {"receivers", json::array({json::array({15.0, 0.0, 0.0})})}};
  j["rng_seed"] = 77;
  const ScenarioConfig c = parse_config(j.dump());
  const SystemSpec spec = build_system(c);
  REQUIRE(spec.cells.size() == 7);
  for (int i = 0; i < 6; ++i) CHECK(spec.cells[i].kind == CellKind::Sender);
  CHECK(spec.cells[6].kind == CellKind::Receiver);
  CHECK(spec.cells[6].position[0] == 15.0);
  // the generator keeps clear of the receiver
  for (int i = 0; i < 6; ++i) CHECK((spec.cells[i].position - spec.cells[6].position).norm() > 3.0);
  CHECK(validate(spec).ok());

  SUBCASE("same config gives the same layout") {
    const SystemSpec again = build_system(c);
    for (std::size_t i = 0; i < spec.cells.size(); ++i)
      CHECK((spec.cells[i].position - again.cells[i].position).norm() == 0.0);
  }
}

TEST_CASE("build_system bounds checks") {
  {
    json j = json::parse(kTwoCellConfig);
    j["csv_cells"] = {0, 5};
    CHECK_THROWS_AS(build_system(parse_config(j.dump())), ValidationError);
  }
  {
    json j = json::parse(kTwoCellConfig);
    j["initial"] = {{"u", {1.0, 2.0, 3.0}}};  // three entries for two cells
    CHECK_THROWS_AS(build_system(parse_config(j.dump())), ValidationError);
  }
  {
    json j = json::parse(kTwoCellConfig);
    j["cells"][1]["position"] = {19.5, 0.0, 0.0};  // outside ||l|| < L - R
    CHECK_THROWS_AS(build_system(parse_config(j.dump())), ValidationError);
  }
}

TEST_CASE("trajectory CSV export layout") {
  Trajectory traj;
  traj.kinds = {CellKind::Sender, CellKind::Receiver};
  traj.offsets = {0, 1};
  traj.times = {0.0, 1.5};
  Eigen::VectorXd s0(3), s1(3), u0(2), u1(2), f0(2), f1(2);
  s0 << 400.0, 300.0, 1.0;
  s1 << 410.0, 299.0, 1.25;
  u0 << 0.0, 0.0;
  u1 << 792.5, 0.000919;
  f0 << 0.0, 0.0;
  f1 << 800.0, 0.000928;
  traj.states = {s0, s1};
  traj.signals = {u0, u1};
  traj.field_samples = {f0, f1};

  const fs::path dir = fresh_dir("csv");

  SUBCASE("all cells") {
    write_trajectory_csv(traj, {}, dir / "t.csv");
    const std::string expect =
        "time,cell_id,kind,species,value\n"
        "0,0,sender,LuxI,400\n"
        "0,0,sender,u,0\n"
        "0,0,sender,v,0\n"
        "0,1,receiver,LacI,300\n"
        "0,1,receiver,TetR,1\n"
        "0,1,receiver,u,0\n"
        "0,1,receiver,v,0\n"
        "1.5,0,sender,LuxI,410\n"
        "1.5,0,sender,u,792.5\n"
        "1.5,0,sender,v,800\n"
        "1.5,1,receiver,LacI,299\n"
        "1.5,1,receiver,TetR,1.25\n"
        "1.5,1,receiver,u,0.000919\n"
        "1.5,1,receiver,v,0.000928\n";
    CHECK(slurp(dir / "t.csv") == expect);
  }
  SUBCASE("filtered to one cell") {
    write_trajectory_csv(traj, {1}, dir / "t1.csv");
    const std::string text = slurp(dir / "t1.csv");
    CHECK(text.find("sender") == std::string::npos);
    CHECK(text.find("1.5,1,receiver,TetR,1.25\n") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("error table CSV export") {
  std::vector<SweepRow> rows(2);
  rows[0] = {0.1, 0.1, 0.002, 0.46, 0.0329};
  rows[1] = {0.01, 0.01, 0.0002, 0.0362, 0.00134};
  const fs::path dir = fresh_dir("errcsv");
  write_error_table_csv(rows, dir / "e.csv");
  CHECK(slurp(dir / "e.csv") ==
        "gamma,eps_u,eps_v,err_x21,err_x22\n"
        "0.1,0.1,0.002,0.46,0.0329\n"
        "0.01,0.01,2e-04,0.0362,0.00134\n");
  fs::remove_all(dir);
}

TEST_CASE("run_scenario gain mode writes the matrix and a manifest") {
  const ScenarioConfig c = parse_config(kTwoCellConfig);
  const fs::path root = fresh_dir("gain");
  const RunResult res = run_scenario(c, root, RunMode::Gain);
  CHECK(res.out_dir == root / output_dir_name(c));
  REQUIRE(fs::exists(res.out_dir / "gain.csv"));
  const std::string gain_csv = slurp(res.out_dir / "gain.csv");
  CHECK(gain_csv.substr(0, 9) == "cell,0,1\n");
  CHECK(gain_csv.find("1.98030") != std::string::npos);

  const json summary = json::parse(res.summary_json);
  CHECK(summary.at("name") == "pair");
  CHECK(summary.at("cells") == 2);
  CHECK(summary.at("time_scales").at("eps_u").get<double>() == doctest::Approx(0.01));

  REQUIRE(fs::exists(res.out_dir / "manifest.json"));
  const json manifest = json::parse(slurp(res.out_dir / "manifest.json"));
  CHECK(manifest.at("name") == "pair");
  CHECK(manifest.at("versions").contains("diffnet"));
  CHECK(manifest.at("versions").contains("eigen"));
  CHECK(manifest.at("wall_seconds").get<double>() >= 0.0);
  CHECK(manifest.at("settings").dump() == c.canonical_json);
  REQUIRE(fs::exists(res.out_dir / "summary.json"));
  CHECK(json::parse(slurp(res.out_dir / "summary.json")) == summary);
  fs::remove_all(root);
}

TEST_CASE("run_scenario reduced simulation reruns byte-identically") {
  const ScenarioConfig c = parse_config(kTwoCellConfig);
  const fs::path root_a = fresh_dir("sim_a"), root_b = fresh_dir("sim_b");
  const RunResult a = run_scenario(c, root_a, RunMode::Simulate);
  const RunResult b = run_scenario(c, root_b, RunMode::Simulate);
  REQUIRE(fs::exists(a.out_dir / "trajectory_reduced.csv"));
  CHECK_FALSE(fs::exists(a.out_dir / "trajectory_full.csv"));
  CHECK(slurp(a.out_dir / "trajectory_reduced.csv") == slurp(b.out_dir / "trajectory_reduced.csv"));
  const std::string head = slurp(a.out_dir / "trajectory_reduced.csv").substr(0, 30);
  CHECK(head == "time,cell_id,kind,species,valu");
  fs::remove_all(root_a);
  fs::remove_all(root_b);
}

TEST_CASE("run_scenario sweep produces the error table") {
  json j = json::parse(kTwoCellConfig);
  j["model"] = "both";
  j["t_end"] = 2.0;
  j["output_dt"] = 1.0;
  j["sweep"] = {{"gammas", {0.1, 0.05}}};
  j["solver"] = {{"full", {{"dt", 0.02}}}};
  const ScenarioConfig c = parse_config(j.dump());
  const fs::path root = fresh_dir("sweep");
  const RunResult res = run_scenario(c, root, RunMode::Sweep);
  REQUIRE(fs::exists(res.out_dir / "error_table.csv"));
  const std::string table = slurp(res.out_dir / "error_table.csv");
  CHECK(table.substr(0, 34) == "gamma,eps_u,eps_v,err_x21,err_x22\n");
  CHECK(std::count(table.begin(), table.end(), '\n') == 3);
  const json summary = json::parse(res.summary_json);
  REQUIRE(summary.contains("sweep"));
  CHECK(summary.at("sweep").at("rows").size() == 2);
  fs::remove_all(root);
}

TEST_CASE("command-line interface round trip") {
  const fs::path dir = fresh_dir("cli");
  const fs::path cfg = dir / "pair.json";
  {
    std::ofstream out(cfg);
    out << kTwoCellConfig;
  }

  SUBCASE("validate accepts the bundled configs") {
    for (const char* name :
         {"paper-4-1.json", "paper-4-1-sweep.json", "paper-4-2-slab.json",
          "paper-4-2-shell.json", "prop-1-decay.json"}) {
      const fs::path bundled = fs::path(DIFFNET_SCENARIO_DIR) / name;
      REQUIRE(fs::exists(bundled));
      CHECK(run_cli("validate --config " + bundled.string()) == 0);
    }
  }

  SUBCASE("simulate runs and reruns byte-identically") {
    const fs::path out = dir / "runs";
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out.string()) == 0);
    const ScenarioConfig c = parse_config(kTwoCellConfig);
    const fs::path traj = out / output_dir_name(c) / "trajectory_reduced.csv";
    REQUIRE(fs::exists(traj));
    const std::string first = slurp(traj);
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out.string()) == 0);
    CHECK(slurp(traj) == first);
  }

  SUBCASE("config errors exit with 2 and leave no outputs") {
    const fs::path bad = dir / "bad.json";
    {
      std::ofstream out(bad);
      out << "{ this is not json";
    }
    const fs::path out = dir / "runs_bad";
    CHECK(run_cli("run --config " + bad.string() + " --out " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK(run_cli("run --config " + (dir / "missing.json").string()) == 2);
  }

  SUBCASE("validation errors exit with 3") {
    json j = json::parse(kTwoCellConfig);
    j["cells"][1]["position"] = {19.5, 0.0, 0.0};
    const fs::path bad = dir / "outside.json";
    {
      std::ofstream out(bad);
      out << j.dump();
    }
    CHECK(run_cli("validate --config " + bad.string()) == 3);
  }

  SUBCASE("solver errors exit with 4") {
    json j = json::parse(kTwoCellConfig);
    j["model"] = "full";
    j["t_end"] = 1.0;
    j["output_dt"] = 1.0;
    j["solver"] = {{"full", {{"dt", 1.0}}}};  // beyond the exchange stability limit
    const fs::path bad = dir / "unstable.json";
    {
      std::ofstream out(bad);
      out << j.dump();
    }
    CHECK(run_cli("simulate --config " + bad.string() + " --out " + (dir / "r4").string()) == 4);
  }

  SUBCASE("seed override changes the output directory") {
    json j = json::parse(kTwoCellConfig);
    j.erase("cells");
    j["placement"] = {{"senders", {{"mode", "ball"}, {"count", 3}, {"radius", 10.0}}},
                      {"receivers", json::array({json::array({15.0, 0.0, 0.0})})}};
    j["rng_seed"] = 5;
    const fs::path cfg2 = dir / "gen.json";
    {
      std::ofstream out(cfg2);
      out << j.dump();
    }
    const fs::path out = dir / "runs_gen";
    REQUIRE(run_cli("gain --config " + cfg2.string() + " --out " + out.string()) == 0);
    REQUIRE(run_cli("gain --config " + cfg2.string() + " --seed 6 --out " + out.string()) == 0);
    int dirs = 0;
    for (const auto& e : fs::directory_iterator(out)) dirs += e.is_directory();
    CHECK(dirs == 2);
  }

  fs::remove_all(dir);
}
