#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

namespace diffnet {

using Vec3 = Eigen::Vector3d;

// Units are fixed project-wide: lengths in um, times in min, concentrations in nM.

struct DomainSpec {
  double L = 0;  // sphere radius (um); the domain is the open ball ||r|| < L
  double D = 0;  // diffusivity (um^2/min)
};

enum class CellKind { Sender, Receiver };

struct CellSpec {
  Vec3 position = Vec3::Zero();  // um
  CellKind kind = CellKind::Sender;
  double R = 0;  // cell radius (um)
};

inline double cell_volume(const CellSpec& c) {
  return 4.0 / 3.0 * std::numbers::pi * c.R * c.R * c.R;
}

struct SignalParams {
  double alpha = 0;    // membrane exchange rate (1/min)
  double a_u = 0;      // signal production per unit LuxI (1/min)
  double gamma_u = 0;  // signal degradation (1/min)
};

struct SenderParams {
  double a_s = 0;      // LuxI production (nM/min)
  double gamma_s = 0;  // LuxI degradation (1/min)
};

struct ReceiverParams {
  double a_r1 = 0, a_r2 = 0;          // production rates (nM/min)
  double gamma_r1 = 0, gamma_r2 = 0;  // degradation rates (1/min)
  double K_1 = 0, K_2 = 0;            // mutual-repression dissociation constants (nM)
  double K_u = 0;                     // signal-activation dissociation constant (nM)
};

// Sender state is [LuxI]; receiver state is [LacI, TetR].
inline int state_dim(CellKind k) { return k == CellKind::Sender ? 1 : 2; }

struct SystemSpec {
  DomainSpec domain;
  std::vector<CellSpec> cells;  // all senders first, then all receivers
  SignalParams signal;
  SenderParams sender_params;
  ReceiverParams receiver_params;
  std::vector<std::vector<double>> initial_state;  // per cell, dimension by kind
  std::vector<double> initial_u;                   // per cell
};

std::size_t num_senders(const SystemSpec& spec);
std::size_t num_receivers(const SystemSpec& spec);

struct ValidationIssue {
  std::string code;     // stable machine-readable tag, e.g. "cell outside domain"
  std::string message;  // human-readable detail
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

// Pure check of every structural invariant; never mutates, never throws.
ValidationReport validate(const SystemSpec& spec);

// The output map of the signal production term: senders expose their LuxI
// concentration (last state component), receivers produce no signal.
double output_map(CellKind kind, const Eigen::VectorXd& state);
double output_map(const SystemSpec& spec, std::size_t cell_index, const Eigen::VectorXd& state);

// Time-stamped simulation record. states[k] stacks every cell's state at
// times[k] (offsets per cell in `offsets`); signals[k] holds u_i. field_samples[k]
// holds the field at the cell positions: v(t, l_i) for the full model, the
// quasi-steady reconstruction nu(t) for the reduced one.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> signals;
  std::vector<Eigen::VectorXd> field_samples;
  std::vector<CellKind> kinds;
  std::vector<int> offsets;  // per-cell start index into the stacked state

  std::size_t num_cells() const { return kinds.size(); }
  bool has_field_samples() const { return !field_samples.empty(); }
  double state_at(std::size_t sample, std::size_t cell, int comp) const {
    return states[sample][offsets[cell] + comp];
  }
};

// Builds the stacked-state layout (kinds + offsets) for a spec.
Trajectory make_trajectory_layout(const SystemSpec& spec);

// Stacks the configured initial state of every cell into one vector.
Eigen::VectorXd stack_initial_state(const SystemSpec& spec);

}  // namespace diffnet
