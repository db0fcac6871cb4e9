#pragma once

#include "diffnet/core_types.hpp"
#include "diffnet/full_field.hpp"
#include "diffnet/reduced_network.hpp"

namespace diffnet {

// Characteristic time scales and the separation ratios that justify the
// reduced model: tau_v = L^2/(pi^2 D) (slowest diffusion mode), tau_u = 1/alpha
// (membrane exchange), tau_x = 1/max(gamma) over the gene circuits present.
struct TimeScales {
  double tau_v = 0;
  double tau_u = 0;
  double tau_x = 0;
  double eps_u = 0;  // tau_u / tau_x
  double eps_v = 0;  // tau_v / tau_x
  bool separated = false;  // both ratios <= 0.1
};

TimeScales time_scales(const SystemSpec& spec);

// Addresses one state component: LuxI is comp 0 of a sender, LacI/TetR are
// comps 0/1 of a receiver.
struct SpeciesRef {
  std::size_t cell = 0;
  int comp = 0;
};

// Largest pointwise gap between two trajectories for one species over the
// overlap of their time ranges; `b` is linearly resampled onto `a`'s times.
double max_abs_error(const Trajectory& a, const Trajectory& b, const SpeciesRef& ref);

struct DecayFit {
  double rate = 0;  // decay constant, -d log(norm) / dt
  double r2 = 0;    // fit quality of the log-linear regression
  double t_begin = 0, t_end = 0;
};

// Least-squares slope of log(norm) versus time over the trailing fraction of
// the samples (default: last 60 percent).
DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& norms,
                        double window_fraction = 0.6);

enum class ToggleState { Off, On };

// Receiver state at the sample nearest t: On iff TetR exceeds LacI.
ToggleState classify_toggle(const Trajectory& traj, std::size_t cell, double t);
inline const char* to_string(ToggleState s) { return s == ToggleState::On ? "ON" : "OFF"; }

// One full-versus-reduced comparison per gamma: the three gene degradation
// rates are set to gamma (the signal's gamma_u is left alone), both models are
// run from the same initial state, and the worst-case receiver errors are
// recorded. Columns follow the two-cell layout: x21 = LacI, x22 = TetR.
struct SweepRow {
  double gamma = 0;
  double eps_u = 0;
  double eps_v = 0;
  double err_x21 = 0;
  double err_x22 = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  // log-log slopes of error versus eps_u: per species and the pooled common
  // slope (shared slope, per-species intercepts).
  double slope_x21 = 0;
  double slope_x22 = 0;
  double pooled_slope = 0;
};

SweepResult epsilon_sweep(const SystemSpec& base, const std::vector<double>& gammas,
                          const FullOptions& full_opts, const ReducedOptions& reduced_opts,
                          double t_end, double output_dt);

}  // namespace diffnet
