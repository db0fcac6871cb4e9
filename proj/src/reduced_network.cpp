#include "diffnet/reduced_network.hpp"

#include <cmath>
#include <stdexcept>

#include "diffnet/cell_models.hpp"
#include "diffnet/errors.hpp"

namespace diffnet {

Eigen::VectorXd ReducedSystem::sender_outputs(const Eigen::VectorXd& y) const {
  // Senders come first and carry a single state, so their LuxI levels are the
  // leading n_senders entries of the stacked state.
  return y.head(n_senders);
}

void ReducedSystem::rhs(double /*t*/, const Eigen::VectorXd& y, Eigen::VectorXd& dydt) const {
  const Eigen::Index n_cells = static_cast<Eigen::Index>(spec.cells.size());
  dydt.resize(y.size());
  Eigen::VectorXd u_recv = recv_gain * y.head(n_senders);
  for (Eigen::Index i = 0; i < n_senders; ++i) dydt[i] = sender_rate(y[i], spec.sender_params);
  for (Eigen::Index i = n_senders; i < n_cells; ++i) {
    const int off = offsets[i];
    Eigen::Vector2d dx = receiver_rate(y.segment<2>(off), u_recv[i - n_senders], spec.receiver_params);
    dydt[off] = dx[0];
    dydt[off + 1] = dx[1];
  }
}

ReducedSystem make_reduced(const SystemSpec& spec, GainMatrix gain, ReducedOptions opts) {
  ReducedSystem sys;
  sys.spec = spec;
  sys.gain = std::move(gain);
  sys.state = stack_initial_state(spec);
  sys.opts = opts;
  sys.integrator = Dopri5({opts.atol, opts.rtol});

  const Eigen::Index n = static_cast<Eigen::Index>(spec.cells.size());
  if (sys.gain.entries.rows() != n) throw std::invalid_argument("make_reduced: gain size mismatch");
  sys.n_senders = static_cast<Eigen::Index>(num_senders(spec));
  Trajectory layout = make_trajectory_layout(spec);
  sys.offsets = layout.offsets;
  sys.gain_sender_cols = sys.gain.entries.leftCols(sys.n_senders);
  sys.recv_gain = sys.gain.entries.bottomLeftCorner(n - sys.n_senders, sys.n_senders);
  return sys;
}

Eigen::VectorXd interconnect(const GainMatrix& gain, const Eigen::VectorXd& Y) {
  if (Y.size() != gain.entries.cols()) throw std::invalid_argument("interconnect: Y length mismatch");
  return gain.entries * Y;
}

double step_reduced(ReducedSystem& sys, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("step_reduced: dt must be positive");
  auto rhs = [&sys](double t, const Eigen::VectorXd& y, Eigen::VectorXd& d) { sys.rhs(t, y, d); };
  if (sys.opts.method == ReducedOptions::Method::FixedRK4) {
    Eigen::VectorXd k1, k2, k3, k4, tmp;
    rk4_step(rhs, sys.state, sys.t, dt, k1, k2, k3, k4, tmp);
    sys.t += dt;
    return dt;
  }
  return sys.integrator.step_once(rhs, sys.state, sys.t, dt);
}

namespace {

void record_sample(const ReducedSystem& sys, Trajectory& traj) {
  Eigen::VectorXd U = sys.gain_sender_cols * sys.sender_outputs(sys.state);
  traj.times.push_back(sys.t);
  traj.states.push_back(sys.state);
  traj.field_samples.push_back(sys.gain.field_op * U);
  traj.signals.push_back(std::move(U));
}

}  // namespace

Trajectory simulate_reduced(const SystemSpec& spec, const GainMatrix& gain, double t_end,
                            double output_dt, ReducedOptions opts) {
  if (!(t_end > 0) || !(output_dt > 0)) throw std::invalid_argument("simulate_reduced: bad horizon");
  ReducedSystem sys = make_reduced(spec, gain, opts);
  Trajectory traj = make_trajectory_layout(spec);
  record_sample(sys, traj);

  auto rhs = [&sys](double t, const Eigen::VectorXd& y, Eigen::VectorXd& d) { sys.rhs(t, y, d); };
  const long n_out = static_cast<long>(std::floor(t_end / output_dt + 1e-9));
  if (opts.method == ReducedOptions::Method::FixedRK4) {
    // Land every sample exactly: divide each output interval into whole steps.
    const long per = std::max(1L, std::lround(output_dt / opts.dt));
    const double dt = output_dt / static_cast<double>(per);
    Eigen::VectorXd k1, k2, k3, k4, tmp;
    for (long k = 1; k <= n_out; ++k) {
      for (long s = 0; s < per; ++s) {
        rk4_step(rhs, sys.state, sys.t, dt, k1, k2, k3, k4, tmp);
        sys.t = (k - 1) * output_dt + (s + 1) * dt;
      }
      sys.t = k * output_dt;
      record_sample(sys, traj);
    }
  } else {
    for (long k = 1; k <= n_out; ++k) {
      sys.integrator.integrate(rhs, sys.state, sys.t, k * output_dt);
      sys.t = k * output_dt;
      record_sample(sys, traj);
    }
  }
  if (!sys.state.allFinite()) throw SolverError("simulate_reduced: non-finite state");
  return traj;
}

Trajectory simulate_reduced(const SystemSpec& spec, double t_end, double output_dt,
                            ReducedOptions opts) {
  if (spec.cells.empty()) throw std::invalid_argument("simulate_reduced: no cells");
  GreenMatrix g = assemble_green(spec.domain, spec.cells);
  GainMatrix gain = assemble_gain(g, spec.signal, cell_volume(spec.cells[0]));
  return simulate_reduced(spec, gain, t_end, output_dt, opts);
}

}  // namespace diffnet
