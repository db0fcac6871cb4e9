#include "diffnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace diffnet {

TimeScales time_scales(const SystemSpec& spec) {
  TimeScales ts;
  if (!(spec.domain.L > 0) || !(spec.domain.D > 0))
    throw std::invalid_argument("time_scales needs a positive domain");
  if (!(spec.signal.alpha > 0)) throw std::invalid_argument("time_scales needs alpha > 0");
  double gmax = 0;
  if (num_senders(spec) > 0) gmax = std::max(gmax, spec.sender_params.gamma_s);
  if (num_receivers(spec) > 0)
    gmax = std::max({gmax, spec.receiver_params.gamma_r1, spec.receiver_params.gamma_r2});
  if (!(gmax > 0))
    throw std::invalid_argument("time_scales needs at least one positive degradation rate");
  ts.tau_v = spec.domain.L * spec.domain.L / (std::numbers::pi * std::numbers::pi * spec.domain.D);
  ts.tau_u = 1.0 / spec.signal.alpha;
  ts.tau_x = 1.0 / gmax;
  ts.eps_u = ts.tau_u / ts.tau_x;
  ts.eps_v = ts.tau_v / ts.tau_x;
  ts.separated = ts.eps_u <= 0.1 && ts.eps_v <= 0.1;
  return ts;
}

namespace {

double interp_state(const Trajectory& t, std::size_t hi, double at, int idx) {
  const double t0 = t.times[hi - 1], t1 = t.times[hi];
  const double w = t1 > t0 ? (at - t0) / (t1 - t0) : 0.0;
  return (1.0 - w) * t.states[hi - 1][idx] + w * t.states[hi][idx];
}

}  // namespace

double max_abs_error(const Trajectory& a, const Trajectory& b, const SpeciesRef& ref) {
  if (a.times.empty() || b.times.empty()) throw std::invalid_argument("empty trajectory");
  if (ref.cell >= a.num_cells() || ref.cell >= b.num_cells())
    throw std::invalid_argument("species reference out of range");
  if (ref.comp < 0 || ref.comp >= state_dim(a.kinds[ref.cell]))
    throw std::invalid_argument("species component out of range");
  const int ia = a.offsets[ref.cell] + ref.comp;
  const int ib = b.offsets[ref.cell] + ref.comp;
  const double lo = std::max(a.times.front(), b.times.front());
  const double hi = std::min(a.times.back(), b.times.back());
  if (lo > hi) throw std::invalid_argument("trajectories share no time range");

  double worst = 0;
  std::size_t j = 1;
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    const double t = a.times[k];
    if (t < lo || t > hi) continue;
    while (j < b.times.size() - 1 && b.times[j] < t) ++j;
    while (j > 1 && b.times[j - 1] > t) --j;
    const double bv = interp_state(b, j, t, ib);
    worst = std::max(worst, std::abs(a.states[k][ia] - bv));
  }
  return worst;
}

DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& norms,
                        double window_fraction) {
  if (times.size() != norms.size()) throw std::invalid_argument("times/norms size mismatch");
  if (!(window_fraction > 0) || window_fraction > 1)
    throw std::invalid_argument("window fraction must lie in (0, 1]");
  const std::size_t n = times.size();
  const std::size_t first = static_cast<std::size_t>(std::floor((1.0 - window_fraction) * n));
  if (n - first < 2) throw std::invalid_argument("need at least two samples in the fit window");

  double sx = 0, sy = 0;
  const std::size_t m = n - first;
  for (std::size_t k = first; k < n; ++k) {
    if (!(norms[k] > 0)) throw std::invalid_argument("decay fit needs positive norms");
    sx += times[k];
    sy += std::log(norms[k]);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = first; k < n; ++k) {
    const double dx = times[k] - mx, dy = std::log(norms[k]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0)) throw std::invalid_argument("degenerate time window");
  const double slope = sxy / sxx;
  DecayFit fit;
  fit.rate = -slope;
  fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.t_begin = times[first];
  fit.t_end = times.back();
  return fit;
}

ToggleState classify_toggle(const Trajectory& traj, std::size_t cell, double t) {
  if (cell >= traj.num_cells()) throw std::invalid_argument("cell index out of range");
  if (traj.kinds[cell] != CellKind::Receiver)
    throw std::invalid_argument("toggle state is only defined for receiver cells");
  if (traj.times.empty()) throw std::invalid_argument("empty trajectory");
  std::size_t best = 0;
  for (std::size_t k = 1; k < traj.times.size(); ++k)
    if (std::abs(traj.times[k] - t) < std::abs(traj.times[best] - t)) best = k;
  const double laci = traj.state_at(best, cell, 0);
  const double tetr = traj.state_at(best, cell, 1);
  return tetr > laci ? ToggleState::On : ToggleState::Off;
}

SweepResult epsilon_sweep(const SystemSpec& base, const std::vector<double>& gammas,
                          const FullOptions& full_opts, const ReducedOptions& reduced_opts,
                          double t_end, double output_dt) {
  if (gammas.empty()) throw std::invalid_argument("sweep needs at least one gamma");
  if (num_receivers(base) == 0) throw std::invalid_argument("sweep needs a receiver cell");

  SweepResult out;
  for (double gamma : gammas) {
    SystemSpec spec = base;
    spec.sender_params.gamma_s = gamma;
    spec.receiver_params.gamma_r1 = gamma;
    spec.receiver_params.gamma_r2 = gamma;

    const TimeScales ts = time_scales(spec);
    const Trajectory red = simulate_reduced(spec, t_end, output_dt, reduced_opts);
    const Trajectory full = simulate_full(spec, full_opts, t_end, output_dt);

    SweepRow row;
    row.gamma = gamma;
    row.eps_u = ts.eps_u;
    row.eps_v = ts.eps_v;
    for (std::size_t c = 0; c < base.cells.size(); ++c) {
      if (base.cells[c].kind != CellKind::Receiver) continue;
      row.err_x21 = std::max(row.err_x21, max_abs_error(full, red, {c, 0}));
      row.err_x22 = std::max(row.err_x22, max_abs_error(full, red, {c, 1}));
    }
    out.rows.push_back(row);
  }

  // Log-log regression of error against eps_u. The pooled slope shares one
  // slope across both species while letting each keep its own intercept.
  const std::size_t n = out.rows.size();
  if (n >= 2) {
    double mx = 0;
    for (const SweepRow& r : out.rows) mx += std::log(r.eps_u);
    mx /= n;
    double sxx = 0, sxy1 = 0, sxy2 = 0, my1 = 0, my2 = 0;
    for (const SweepRow& r : out.rows) {
      my1 += std::log(r.err_x21);
      my2 += std::log(r.err_x22);
    }
    my1 /= n;
    my2 /= n;
    for (const SweepRow& r : out.rows) {
      const double dx = std::log(r.eps_u) - mx;
      sxx += dx * dx;
      sxy1 += dx * (std::log(r.err_x21) - my1);
      sxy2 += dx * (std::log(r.err_x22) - my2);
    }
    out.slope_x21 = sxy1 / sxx;
    out.slope_x22 = sxy2 / sxx;
    out.pooled_slope = (sxy1 + sxy2) / (2.0 * sxx);
  }
  return out;
}

}  // namespace diffnet
