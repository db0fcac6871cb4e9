#include "diffnet/full_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "diffnet/cell_models.hpp"
#include "diffnet/errors.hpp"
#include "diffnet/util.hpp"

namespace diffnet {

FieldGrid build_grid(const DomainSpec& domain, double h) {
  if (!(domain.L > 0) || !(h > 0)) throw ValidationError("grid needs positive L and h");
  if (h > domain.L / 4.0 * (1 + 1e-12))
    throw ValidationError("grid spacing too coarse: need h <= L/4, got h=" + format_double(h) +
                          " L=" + format_double(domain.L));
  FieldGrid g;
  g.h = h;
  g.L = domain.L;
  g.n1 = static_cast<int>(std::floor(2.0 * domain.L / h + 1e-9)) + 1;
  const int n1 = g.n1;
  g.interior_id.assign(static_cast<std::size_t>(n1) * n1 * n1, -1);

  const double L2 = domain.L * domain.L;
  std::int32_t next = 0;
  for (int ix = 0; ix < n1; ++ix) {
    const double x = -domain.L + ix * h;
    for (int iy = 0; iy < n1; ++iy) {
      const double y = -domain.L + iy * h;
      const double xy2 = x * x + y * y;
      for (int iz = 0; iz < n1; ++iz) {
        const double z = -domain.L + iz * h;
        if (xy2 + z * z < L2) g.interior_id[g.lattice_index(ix, iy, iz)] = next++;
      }
    }
  }
  g.num_interior = next;
  g.lattice_of.resize(next);
  g.nbr.resize(next);
  for (int ix = 0; ix < n1; ++ix)
    for (int iy = 0; iy < n1; ++iy)
      for (int iz = 0; iz < n1; ++iz) {
        const std::int32_t id = g.interior_id[g.lattice_index(ix, iy, iz)];
        if (id < 0) continue;
        g.lattice_of[id] = g.lattice_index(ix, iy, iz);
        auto look = [&](int jx, int jy, int jz) -> std::int32_t {
          if (jx < 0 || jy < 0 || jz < 0 || jx >= n1 || jy >= n1 || jz >= n1) return -1;
          return g.interior_id[g.lattice_index(jx, jy, jz)];
        };
        g.nbr[id] = {look(ix - 1, iy, iz), look(ix + 1, iy, iz), look(ix, iy - 1, iz),
                     look(ix, iy + 1, iz), look(ix, iy, iz - 1), look(ix, iy, iz + 1)};
      }
  return g;
}

SourceStencil deposit_and_sample(const FieldGrid& grid, const Vec3& position) {
  SourceStencil s{};
  const double inv_h3 = 1.0 / (grid.h * grid.h * grid.h);
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double t = (position[a] + grid.L) / grid.h;
    base[a] = static_cast<int>(std::floor(t));
    frac[a] = t - base[a];
  }
  int k = 0;
  for (int dx = 0; dx < 2; ++dx)
    for (int dy = 0; dy < 2; ++dy)
      for (int dz = 0; dz < 2; ++dz, ++k) {
        const int ix = base[0] + dx, iy = base[1] + dy, iz = base[2] + dz;
        std::int32_t id = -1;
        if (ix >= 0 && iy >= 0 && iz >= 0 && ix < grid.n1 && iy < grid.n1 && iz < grid.n1)
          id = grid.interior_id[grid.lattice_index(ix, iy, iz)];
        if (id < 0)
          throw ValidationError("cell stencil touches an exterior grid node at (" +
                                format_double(position[0]) + ", " + format_double(position[1]) +
                                ", " + format_double(position[2]) + "); refine h or move the cell");
        const double wx = dx ? frac[0] : 1.0 - frac[0];
        const double wy = dy ? frac[1] : 1.0 - frac[1];
        const double wz = dz ? frac[2] : 1.0 - frac[2];
        s.nodes[k] = id;
        s.weights[k] = wx * wy * wz * inv_h3;
      }
  return s;
}

double field_l2(const FieldGrid& grid, const Eigen::VectorXd& v) {
  return std::sqrt(grid.h * grid.h * grid.h * v.squaredNorm());
}

namespace {

// Negative discrete Laplacian times D, i.e. out = -D * Lap_h(in), Dirichlet
// zero outside the interior set. The workhorse of both the BE step and the
// static solves.
void apply_neg_lap(const FieldGrid& g, double D, const Eigen::VectorXd& in, Eigen::VectorXd& out) {
  const double s = D / (g.h * g.h);
  const double* pin = in.data();
  double* pout = out.data();
  const int n = g.num_interior;
  for (int i = 0; i < n; ++i) {
    const auto& nb = g.nbr[i];
    double acc = 6.0 * pin[i];
    if (nb[0] >= 0) acc -= pin[nb[0]];
    if (nb[1] >= 0) acc -= pin[nb[1]];
    if (nb[2] >= 0) acc -= pin[nb[2]];
    if (nb[3] >= 0) acc -= pin[nb[3]];
    if (nb[4] >= 0) acc -= pin[nb[4]];
    if (nb[5] >= 0) acc -= pin[nb[5]];
    pout[i] = s * acc;
  }
}

// Conjugate gradient on a caller-supplied SPD apply; x holds the warm start on
// entry and the solution on exit. Returns iterations used, throws when the
// relative residual fails to reach tol within maxit.
template <class Apply>
int cg(const Apply& apply, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol, int maxit,
       Eigen::VectorXd& r, Eigen::VectorXd& p, Eigen::VectorXd& ap) {
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    return 0;
  }
  apply(x, r);
  r = b - r;
  double rr = r.squaredNorm();
  const double stop = tol * bnorm;
  if (std::sqrt(rr) <= stop) return 0;
  p = r;
  for (int it = 1; it <= maxit; ++it) {
    apply(p, ap);
    const double pap = p.dot(ap);
    if (!(pap > 0)) throw SolverError("conjugate gradient lost positive definiteness");
    const double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rr_new = r.squaredNorm();
    if (std::sqrt(rr_new) <= stop) return it;
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  throw SolverError("conjugate gradient failed to converge within " + std::to_string(maxit) +
                    " iterations");
}

}  // namespace

FullSim::FullSim(const SystemSpec& spec, const FullOptions& opts) : spec_(spec), opts_(opts) {
  ValidationReport rep = validate(spec_);
  if (!rep.ok())
    throw ValidationError(rep.issues.front().code + ": " + rep.issues.front().message);
  if (!(opts_.dt > 0)) throw ConfigError("field solver needs dt > 0");
  if (!(opts_.cg_tol > 0) || opts_.cg_maxit < 1) throw ConfigError("bad conjugate-gradient options");
  grid_ = build_grid(spec_.domain, opts_.h);

  const std::size_t n = spec_.cells.size();
  stencils_.reserve(n);
  volumes_.reserve(n);
  offsets_.reserve(n);
  int off = 0;
  for (const CellSpec& c : spec_.cells) {
    if (opts_.h > c.R * (1 + 1e-12))
      throw ValidationError("grid spacing exceeds a cell radius: need h <= R, got h=" +
                            format_double(opts_.h) + " R=" + format_double(c.R));
    stencils_.push_back(deposit_and_sample(grid_, c.position));
    volumes_.push_back(cell_volume(c));
    offsets_.push_back(off);
    off += state_dim(c.kind);
  }

  x_ = stack_initial_state(spec_);
  u_ = Eigen::Map<const Eigen::VectorXd>(spec_.initial_u.data(),
                                         static_cast<Eigen::Index>(spec_.initial_u.size()));
  v_ = Eigen::VectorXd::Zero(grid_.num_interior);
  if (opts_.initial_field)
    for (int i = 0; i < grid_.num_interior; ++i) v_[i] = opts_.initial_field(grid_.node_position(i));

  cg_r_.resize(grid_.num_interior);
  cg_p_.resize(grid_.num_interior);
  cg_ap_.resize(grid_.num_interior);
  rhs_.resize(grid_.num_interior);

  // The exchange pair (u_i, sampled field) advances explicitly; its local
  // Jacobian [[-(alpha+gamma_u), alpha], [c, -c]] with c = V*alpha*h^3*sum(w^2)
  // has two real negative eigenvalues, so forward Euler is stable iff
  // dt < 2/|lambda_fast|. Refuse clearly unstable settings up front.
  const double alpha = spec_.signal.alpha, gamma_u = spec_.signal.gamma_u;
  const double h3 = opts_.h * opts_.h * opts_.h;
  double lam_fast = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double sw2 = 0;
    for (double w : stencils_[i].weights) sw2 += w * w;
    const double c = volumes_[i] * alpha * h3 * sw2;
    const double s = alpha + gamma_u + c;
    lam_fast = std::max(lam_fast, 0.5 * (s + std::sqrt(s * s - 4.0 * c * gamma_u)));
  }
  if (n > 0 && opts_.dt * lam_fast >= 2.0)
    throw SolverError("explicit exchange update unstable: dt=" + format_double(opts_.dt) +
                      " exceeds 2/lambda=" + format_double(2.0 / lam_fast) + "; use dt <= " +
                      format_double(1.8 / lam_fast));
}

void FullSim::set_field(Eigen::VectorXd v) {
  if (v.size() != grid_.num_interior) throw ConfigError("field vector size mismatch");
  v_ = std::move(v);
}

double FullSim::total_signal_mass() const {
  double m = grid_.h * grid_.h * grid_.h * v_.sum();
  for (std::size_t i = 0; i < volumes_.size(); ++i) m += volumes_[i] * u_[i];
  return m;
}

int FullSim::cg_solve(const Eigen::VectorXd& b, Eigen::VectorXd& v) const {
  const double dtD = opts_.dt * spec_.domain.D;
  const double s = dtD / (grid_.h * grid_.h);
  const FieldGrid& g = grid_;
  auto apply = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
    const double* pin = in.data();
    double* pout = out.data();
    const int n = g.num_interior;
    for (int i = 0; i < n; ++i) {
      const auto& nb = g.nbr[i];
      double acc = 6.0 * pin[i];
      if (nb[0] >= 0) acc -= pin[nb[0]];
      if (nb[1] >= 0) acc -= pin[nb[1]];
      if (nb[2] >= 0) acc -= pin[nb[2]];
      if (nb[3] >= 0) acc -= pin[nb[3]];
      if (nb[4] >= 0) acc -= pin[nb[4]];
      if (nb[5] >= 0) acc -= pin[nb[5]];
      pout[i] = pin[i] + s * acc;
    }
  };
  return cg(apply, b, v, opts_.cg_tol, opts_.cg_maxit, cg_r_, cg_p_, cg_ap_);
}

void FullSim::step() {
  const std::size_t n = spec_.cells.size();
  const double dt = opts_.dt;
  const SignalParams& sig = spec_.signal;

  const bool audit = opts_.mass_audit;
  const double mass_before = audit ? total_signal_mass() : 0.0;

  // Everything on the right-hand side is evaluated at the step start.
  Eigen::VectorXd du(n), xdot(x_.size());
  double prod = 0, deg = 0, exch = 0;
  rhs_ = v_;
  for (std::size_t i = 0; i < n; ++i) {
    const double s_i = sample_field(grid_, stencils_[i], v_);
    const CellKind kind = spec_.cells[i].kind;
    const int off = offsets_[i];
    double y;
    if (kind == CellKind::Sender) {
      y = x_[off];
      xdot[off] = sender_rate(x_[off], spec_.sender_params);
    } else {
      y = 0.0;
      Eigen::Vector2d r = receiver_rate(x_.segment<2>(off), u_[i], spec_.receiver_params);
      xdot[off] = r[0];
      xdot[off + 1] = r[1];
    }
    du[i] = signal_rate(u_[i], y, s_i, sig);
    const double flux = volumes_[i] * sig.alpha * (u_[i] - s_i);
    const SourceStencil& st = stencils_[i];
    for (int k = 0; k < 8; ++k) rhs_[st.nodes[k]] += dt * flux * st.weights[k];
    if (audit) {
      prod += volumes_[i] * sig.a_u * y;
      deg += volumes_[i] * sig.gamma_u * u_[i];
      exch += flux;
    }
  }

  cg_solve(rhs_, v_);  // warm started from the previous field

  if (!opts_.freeze_cells && n > 0) {
    u_ += dt * du;
    x_ += dt * xdot;
  }

  if (audit) {
    // Boundary outflux F = -D h^3 sum(Lap_h v_new); interior stencil terms
    // telescope away, so only nodes with exterior neighbours contribute.
    double bsum = 0;
    for (int i = 0; i < grid_.num_interior; ++i) {
      const auto& nb = grid_.nbr[i];
      int missing = 0;
      for (int d = 0; d < 6; ++d) missing += (nb[d] < 0);
      if (missing) bsum += missing * v_[i];
    }
    const double F = spec_.domain.D * grid_.h * bsum;
    const double mass_after = total_signal_mass();
    const double expected =
        opts_.freeze_cells ? dt * (exch - F) : dt * (prod - deg - F);
    const double resid =
        std::abs(mass_after - mass_before - expected) / std::max(1.0, std::abs(mass_after));
    max_mass_residual_ = std::max(max_mass_residual_, resid);
  }

  ++steps_;
  t_ = static_cast<double>(steps_) * dt;
}

Trajectory simulate_full(const SystemSpec& spec, const FullOptions& opts, double t_end,
                         double output_dt) {
  if (!(t_end > 0) || !(output_dt > 0)) throw ConfigError("t_end and output_dt must be positive");
  const double per_f = output_dt / opts.dt;
  const long per = std::lround(per_f);
  if (per < 1 || std::abs(per_f - per) > 1e-6 * per_f)
    throw ConfigError("output_dt must be an integer multiple of dt for the field model");

  FullSim sim(spec, opts);
  Trajectory traj = make_trajectory_layout(spec);
  const std::size_t n = spec.cells.size();

  std::vector<double> snaps = opts.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  auto maybe_snapshot = [&](double t) {
    while (next_snap < snaps.size() && snaps[next_snap] <= t + 1e-9 * opts.dt) {
      const std::string stem = "field_t" + format_double(snaps[next_snap]);
      write_snapshot_dnsf(sim.grid(), sim.field(), opts.snapshot_dir / (stem + ".dnsf"));
      if (opts.snapshot_csv)
        write_snapshot_csv(sim.grid(), sim.field(), opts.snapshot_dir / (stem + ".csv"));
      ++next_snap;
    }
  };

  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.states.push_back(sim.x());
    traj.signals.push_back(sim.u());
    Eigen::VectorXd fs(n);
    for (std::size_t i = 0; i < n; ++i) fs[i] = sim.sample_at_cell(i);
    traj.field_samples.push_back(std::move(fs));
    if (!sim.x().allFinite() || !sim.u().allFinite())
      throw SolverError("non-finite state at t=" + format_double(t));
  };

  record(0.0);
  maybe_snapshot(0.0);
  const long n_out = std::lround(t_end / output_dt);
  if (n_out < 1 || std::abs(n_out * output_dt - t_end) > 1e-6 * t_end)
    throw ConfigError("t_end must be an integer multiple of output_dt");
  for (long k = 1; k <= n_out; ++k) {
    for (long j = 0; j < per; ++j) {
      sim.step();
      maybe_snapshot(sim.t());
    }
    record(sim.t());
  }
  return traj;
}

StaticExchangeResult solve_static_exchange(const SystemSpec& spec, const FullOptions& opts,
                                           const Eigen::VectorXd& y) {
  FieldGrid grid = build_grid(spec.domain, opts.h);
  const std::size_t n = spec.cells.size();
  if (static_cast<std::size_t>(y.size()) != n) throw ConfigError("output vector size mismatch");
  std::vector<SourceStencil> st;
  st.reserve(n);
  std::vector<double> vol(n);
  for (std::size_t i = 0; i < n; ++i) {
    st.push_back(deposit_and_sample(grid, spec.cells[i].position));
    vol[i] = cell_volume(spec.cells[i]);
  }
  const double alpha = spec.signal.alpha, gamma_u = spec.signal.gamma_u;
  const double denom = alpha + gamma_u;
  const double h3 = opts.h * opts.h * opts.h;

  // Eliminating u_i at equilibrium leaves -D Lap v + sum_i V_i*alpha*gamma_u/denom
  // * s_i * w_i = sum_i V_i*alpha*a_u*y_i/denom * w_i, still SPD.
  Eigen::VectorXd b = Eigen::VectorXd::Zero(grid.num_interior);
  for (std::size_t i = 0; i < n; ++i) {
    const double src = vol[i] * alpha * spec.signal.a_u * y[i] / denom;
    for (int k = 0; k < 8; ++k) b[st[i].nodes[k]] += src * st[i].weights[k];
  }
  auto apply = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
    apply_neg_lap(grid, spec.domain.D, in, out);
    for (std::size_t i = 0; i < n; ++i) {
      double s_i = 0;
      for (int k = 0; k < 8; ++k) s_i += st[i].weights[k] * in[st[i].nodes[k]];
      s_i *= h3;
      const double coef = vol[i] * alpha * gamma_u / denom * s_i;
      for (int k = 0; k < 8; ++k) out[st[i].nodes[k]] += coef * st[i].weights[k];
    }
  };
  StaticExchangeResult res;
  res.field = Eigen::VectorXd::Zero(grid.num_interior);
  Eigen::VectorXd r(grid.num_interior), p(grid.num_interior), ap(grid.num_interior);
  cg(apply, b, res.field, opts.cg_tol, opts.cg_maxit, r, p, ap);
  res.u.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s_i = sample_field(grid, st[i], res.field);
    res.u[i] = (spec.signal.a_u * y[i] + alpha * s_i) / denom;
  }
  return res;
}

Eigen::VectorXd solve_static_frozen_u(const SystemSpec& spec, const FullOptions& opts,
                                      const Eigen::VectorXd& u) {
  FieldGrid grid = build_grid(spec.domain, opts.h);
  const std::size_t n = spec.cells.size();
  if (static_cast<std::size_t>(u.size()) != n) throw ConfigError("signal vector size mismatch");
  std::vector<SourceStencil> st;
  st.reserve(n);
  std::vector<double> vol(n);
  for (std::size_t i = 0; i < n; ++i) {
    st.push_back(deposit_and_sample(grid, spec.cells[i].position));
    vol[i] = cell_volume(spec.cells[i]);
  }
  const double alpha = spec.signal.alpha;
  const double h3 = opts.h * opts.h * opts.h;

  Eigen::VectorXd b = Eigen::VectorXd::Zero(grid.num_interior);
  for (std::size_t i = 0; i < n; ++i) {
    const double src = vol[i] * alpha * u[i];
    for (int k = 0; k < 8; ++k) b[st[i].nodes[k]] += src * st[i].weights[k];
  }
  auto apply = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
    apply_neg_lap(grid, spec.domain.D, in, out);
    for (std::size_t i = 0; i < n; ++i) {
      double s_i = 0;
      for (int k = 0; k < 8; ++k) s_i += st[i].weights[k] * in[st[i].nodes[k]];
      s_i *= h3;
      const double coef = vol[i] * alpha * s_i;
      for (int k = 0; k < 8; ++k) out[st[i].nodes[k]] += coef * st[i].weights[k];
    }
  };
  Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.num_interior);
  Eigen::VectorXd r(grid.num_interior), p(grid.num_interior), ap(grid.num_interior);
  cg(apply, b, v, opts.cg_tol, opts.cg_maxit, r, p, ap);
  return v;
}

void write_snapshot_dnsf(const FieldGrid& grid, const Eigen::VectorXd& v,
                         const std::filesystem::path& path) {
  const int n1 = grid.n1;
  const std::size_t total = static_cast<std::size_t>(n1) * n1 * n1;
  std::string buf;
  buf.resize(32 + total * 8);
  char* out = buf.data();
  std::memcpy(out, "DNSF", 4);
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(n1), static_cast<std::uint32_t>(n1),
                                 static_cast<std::uint32_t>(n1)};
  std::memcpy(out + 4, dims, 12);
  std::memcpy(out + 16, &grid.h, 8);
  std::memcpy(out + 24, &grid.L, 8);
  double* vals = reinterpret_cast<double*>(out + 32);
  for (std::size_t lin = 0; lin < total; ++lin) {
    const std::int32_t id = grid.interior_id[lin];
    vals[lin] = id >= 0 ? v[id] : 0.0;
  }
  atomic_write_file(path, buf);
}

void write_snapshot_csv(const FieldGrid& grid, const Eigen::VectorXd& v,
                        const std::filesystem::path& path) {
  std::string buf = "x,y,z,v\n";
  for (int i = 0; i < grid.num_interior; ++i) {
    const Vec3 p = grid.node_position(i);
    buf += format_double(p[0]);
    buf += ',';
    buf += format_double(p[1]);
    buf += ',';
    buf += format_double(p[2]);
    buf += ',';
    buf += format_double(v[i]);
    buf += '\n';
  }
  atomic_write_file(path, buf);
}

}  // namespace diffnet
