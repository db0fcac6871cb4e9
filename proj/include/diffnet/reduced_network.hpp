#pragma once

#include "diffnet/core_types.hpp"
#include "diffnet/greens_kernel.hpp"
#include "diffnet/ode.hpp"

namespace diffnet {

struct ReducedOptions {
  enum class Method { Adaptive, FixedRK4 };
  Method method = Method::Adaptive;
  double atol = 1e-6;  // nM
  double rtol = 1e-6;
  double dt = 0.1;  // fixed-step size (min); adaptive mode ignores it
};

// The intracellular network closed by the static interconnection U = Gain * Y.
// Receiver outputs are zero, so only the sender columns of the gain enter the
// dynamics; the slices below are cut once at construction.
struct ReducedSystem {
  SystemSpec spec;
  GainMatrix gain;
  Eigen::VectorXd state;  // stacked x, senders first
  double t = 0;

  Eigen::MatrixXd gain_sender_cols;      // (N+M) x N, for recording U
  Eigen::MatrixXd recv_gain;             // M x N, u at receivers for the RHS
  std::vector<int> offsets;              // per-cell stacked-state offsets
  Eigen::Index n_senders = 0;

  ReducedOptions opts;
  Dopri5 integrator;

  void rhs(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt) const;
  Eigen::VectorXd sender_outputs(const Eigen::VectorXd& y) const;  // Y restricted to senders
};

ReducedSystem make_reduced(const SystemSpec& spec, GainMatrix gain, ReducedOptions opts = {});

// U = Gain * Y (receiver entries of Y are zero by the output map).
Eigen::VectorXd interconnect(const GainMatrix& gain, const Eigen::VectorXd& Y);

// Advances by one integrator step of at most dt; returns the accepted size
// (adaptive rejections shrink it). The interconnection is re-evaluated inside
// every stage, never lagged.
double step_reduced(ReducedSystem& sys, double dt);

// Samples at multiples of output_dt up to t_end. signals = U(t), field_samples =
// the quasi-steady reconstruction nu(t) at the cell positions.
Trajectory simulate_reduced(const SystemSpec& spec, const GainMatrix& gain, double t_end,
                            double output_dt, ReducedOptions opts = {});

// Convenience overload that assembles the gain itself (V from the first cell).
Trajectory simulate_reduced(const SystemSpec& spec, double t_end, double output_dt,
                            ReducedOptions opts = {});

}  // namespace diffnet
