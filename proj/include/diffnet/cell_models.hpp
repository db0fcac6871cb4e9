#pragma once

#include "diffnet/core_types.hpp"

namespace diffnet {

// Intracellular reaction rates for the sender and receiver circuits plus the
// intracellular signal balance. All are pure and Lipschitz on the nonnegative
// orthant, and every component rate is nonnegative where its state hits zero,
// so trajectories started nonnegative stay nonnegative.

// d[LuxI]/dt = a_s - gamma_s * x1
inline double sender_rate(double x1, const SenderParams& p) { return p.a_s - p.gamma_s * x1; }

// d[LacI]/dt = a_r1 * K2^2/(K2^2 + x2^2) - gamma_r1 * x1
// d[TetR]/dt = a_r2 * (u^2/(K_u^2 + u^2) + K1^2/(K1^2 + x1^2)) - gamma_r2 * x2
inline Eigen::Vector2d receiver_rate(const Eigen::Vector2d& x, double u, const ReceiverParams& p) {
  const double k2sq = p.K_2 * p.K_2, k1sq = p.K_1 * p.K_1, kusq = p.K_u * p.K_u;
  const double dx1 = p.a_r1 * k2sq / (k2sq + x[1] * x[1]) - p.gamma_r1 * x[0];
  const double dx2 =
      p.a_r2 * (u * u / (kusq + u * u) + k1sq / (k1sq + x[0] * x[0])) - p.gamma_r2 * x[1];
  return {dx1, dx2};
}

// du/dt = a_u * y - gamma_u * u + alpha * (v_local - u)
inline double signal_rate(double u, double y, double v_local, const SignalParams& p) {
  return p.a_u * y - p.gamma_u * u + p.alpha * (v_local - u);
}

// The parameter set shared by every bundled scenario.
struct ParamPreset {
  SignalParams signal;
  SenderParams sender;
  ReceiverParams receiver;
  double R;  // cell radius (um)
  double D;  // diffusivity (um^2/min)
};

ParamPreset paper_sec4_preset();

// Looks up a preset by name ("paper-sec4"); throws on unknown names.
ParamPreset named_preset(const std::string& name);

}  // namespace diffnet
