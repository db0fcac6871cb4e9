#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "diffnet/analysis.hpp"
#include "diffnet/cell_models.hpp"
#include "diffnet/core_types.hpp"
#include "diffnet/full_field.hpp"
#include "diffnet/reduced_network.hpp"

namespace diffnet {

inline constexpr const char* kDiffnetVersion = "1.0.0";

// Sender placement generators. Slab and ball sampling are seeded dart throwing
// (uniform proposals, pairwise separation > 2R, shared attempt budget of 1e6);
// the spherical-surface lattice is deterministic.
std::vector<Vec3> place_slab(int count, double r1_min, double r1_max, const DomainSpec& domain,
                             double R, std::uint64_t seed, const std::vector<Vec3>& avoid = {});
std::vector<Vec3> place_shell(int count, double radius, const DomainSpec& domain, double R);
std::vector<Vec3> place_ball(int count, double radius, const DomainSpec& domain, double R,
                             std::uint64_t seed, const std::vector<Vec3>& avoid = {});

struct PlacementSpec {
  enum class Mode { None, Slab, SphereSurface, Ball };
  Mode mode = Mode::None;
  int count = 0;
  double r1_min = 0, r1_max = 0;  // slab bounds on the first coordinate
  double radius = 0;              // sphere_surface / ball
};

// A parsed and structurally validated scenario document (JSON, "schema": 1).
// canonical_json is the sorted-key re-serialization that the content hash and
// the manifest are derived from; CLI overrides are folded in before hashing.
struct ScenarioConfig {
  std::string name;
  std::string model = "reduced";        // reduced | full | both
  std::string experiment = "coupled";   // coupled | field_decay
  DomainSpec domain;
  ParamPreset params;

  std::vector<CellSpec> cells;           // explicit layout (empty when generated)
  PlacementSpec placement;               // sender generator
  std::vector<Vec3> receiver_positions;  // receivers used with a generator

  std::vector<double> init_sender{400.0};
  std::vector<double> init_receiver{300.0, 1.0};
  std::vector<double> init_u;  // empty: zeros; one entry: broadcast; else per cell

  ReducedOptions reduced_opts;
  FullOptions full_opts;
  double t_end = 0;
  double output_dt = 0;
  std::vector<std::string> analyses;  // error_table | decay_fit | toggle_report | gain_export
  std::vector<double> sweep_gammas;
  std::uint64_t rng_seed = 0;
  bool has_seed = false;
  std::vector<int> csv_cells;  // trajectory-CSV cell filter; empty = all cells
  double fit_window = 0.6;

  std::string canonical_json;
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model;
};

ScenarioConfig parse_config(const std::string& json_text, const ConfigOverrides& ov = {});
ScenarioConfig load_config(const std::filesystem::path& path, const ConfigOverrides& ov = {});

// Resolves placements (seeded) and initial conditions into a validated spec.
SystemSpec build_system(const ScenarioConfig& config);

std::uint64_t config_hash(const ScenarioConfig& config);
std::string output_dir_name(const ScenarioConfig& config);  // "<name>-<hash16>"

enum class RunMode {
  Gain,      // assemble the gain matrix and export it, no simulation
  Simulate,  // trajectories only
  Sweep,     // epsilon sweep only (requires sweep.gammas)
  Analyze,   // simulations kept in memory, only analysis outputs written
  Run,       // trajectories plus every configured analysis
};

struct RunResult {
  std::filesystem::path out_dir;
  std::string summary_json;
};

RunResult run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_root,
                       RunMode mode);

// Long-form trajectory export: time,cell_id,kind,species,value. `cells` filters
// by cell id (empty = all). Species rows per cell: the state components (LuxI
// for senders, LacI/TetR for receivers), then u, then v when sampled.
void write_trajectory_csv(const Trajectory& traj, const std::vector<int>& cells,
                          const std::filesystem::path& path);

void write_error_table_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace diffnet
