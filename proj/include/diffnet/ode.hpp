#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>

#include "diffnet/errors.hpp"

namespace diffnet {

struct OdeOptions {
  double atol = 1e-6;
  double rtol = 1e-6;
  double dt_init = 0;  // 0: pick from the first RHS magnitude
  double dt_min = 1e-12;
};

struct OdeStats {
  std::uint64_t steps = 0;
  std::uint64_t rejected = 0;
};

// Dormand-Prince 5(4) embedded pair with a standard step controller. The RHS
// callable has signature rhs(t, y, dydt). Workspace vectors live in the object
// so repeated integrations do not reallocate.
class Dopri5 {
 public:
  explicit Dopri5(OdeOptions opts = {}) : opts_(opts) {}

  // Advances y from t0 to t1, landing on t1 exactly. Returns stats.
  template <class RHS>
  OdeStats integrate(RHS&& rhs, Eigen::VectorXd& y, double t0, double t1) {
    OdeStats stats;
    double t = t0;
    resize(y.size());
    rhs(t, y, k1_);
    double dt = opts_.dt_init > 0 ? opts_.dt_init : initial_dt(y, t1 - t0);
    while (t < t1) {
      dt = std::min(dt, t1 - t);
      double err = attempt(rhs, y, t, dt);
      if (!std::isfinite(err)) throw SolverError("ode: non-finite state");
      if (err <= 1.0) {
        t += dt;
        y.swap(ynew_);
        k1_.swap(k7_);  // first-same-as-last
        ++stats.steps;
        dt *= std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 1.0, 5.0);
      } else {
        ++stats.rejected;
        dt *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
        if (dt < opts_.dt_min) throw SolverError("ode: step size underflow");
      }
    }
    return stats;
  }

  // Takes exactly one accepted step of size at most dt_try; returns the
  // accepted size (smaller than dt_try if the controller rejected it).
  template <class RHS>
  double step_once(RHS&& rhs, Eigen::VectorXd& y, double& t, double dt_try) {
    resize(y.size());
    rhs(t, y, k1_);
    double dt = dt_try;
    for (;;) {
      double err = attempt(rhs, y, t, dt);
      if (!std::isfinite(err)) throw SolverError("ode: non-finite state");
      if (err <= 1.0) {
        t += dt;
        y.swap(ynew_);
        return dt;
      }
      dt *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
      if (dt < opts_.dt_min) throw SolverError("ode: step size underflow");
    }
  }

 private:
  void resize(Eigen::Index n) {
    if (k1_.size() == n) return;
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_}) v->resize(n);
  }

  double initial_dt(const Eigen::VectorXd& y, double span) const {
    double scale = opts_.atol + opts_.rtol * y.cwiseAbs().maxCoeff();
    double d = k1_.cwiseAbs().maxCoeff();
    double dt = d > 0 ? 0.01 * scale / d : span / 100.0;
    return std::min(dt, span);
  }

  // One trial step from (t, y) with k1_ already evaluated; fills ynew_ and k7_
  // and returns the scaled error norm.
  template <class RHS>
  double attempt(RHS&& rhs, const Eigen::VectorXd& y, double t, double dt) {
    ytmp_ = y + dt * (a21 * k1_);
    rhs(t + c2 * dt, ytmp_, k2_);
    ytmp_ = y + dt * (a31 * k1_ + a32 * k2_);
    rhs(t + c3 * dt, ytmp_, k3_);
    ytmp_ = y + dt * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    rhs(t + c4 * dt, ytmp_, k4_);
    ytmp_ = y + dt * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    rhs(t + c5 * dt, ytmp_, k5_);
    ytmp_ = y + dt * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    rhs(t + dt, ytmp_, k6_);
    ynew_ = y + dt * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
    rhs(t + dt, ynew_, k7_);
    double sum = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      double e = dt * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
      double sc = opts_.atol + opts_.rtol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
      sum += (e / sc) * (e / sc);
    }
    return std::sqrt(sum / static_cast<double>(y.size()));
  }

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  OdeOptions opts_;
  Eigen::VectorXd k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_;
};

// Classic fixed-step RK4; used for bit-reproducible runs.
template <class RHS>
void rk4_step(RHS&& rhs, Eigen::VectorXd& y, double t, double dt, Eigen::VectorXd& k1,
              Eigen::VectorXd& k2, Eigen::VectorXd& k3, Eigen::VectorXd& k4, Eigen::VectorXd& tmp) {
  rhs(t, y, k1);
  tmp = y + 0.5 * dt * k1;
  rhs(t + 0.5 * dt, tmp, k2);
  tmp = y + 0.5 * dt * k2;
  rhs(t + 0.5 * dt, tmp, k3);
  tmp = y + dt * k3;
  rhs(t + dt, tmp, k4);
  y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace diffnet
