#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>

#include "diffnet/core_types.hpp"

namespace diffnet {

// Cartesian lattice over [-L, L]^3 with nodes at -L + i*h. A node is interior
// iff its center satisfies ||node|| < L; everything else is Dirichlet zero.
// Interior nodes are packed into a flat index space for the solver.
struct FieldGrid {
  double h = 0;
  double L = 0;
  int n1 = 0;  // nodes per axis
  int num_interior = 0;
  std::vector<std::int32_t> interior_id;           // lattice -> interior index, -1 outside
  std::vector<std::array<std::int32_t, 6>> nbr;    // per interior node: -x +x -y +y -z +z
  std::vector<std::int32_t> lattice_of;            // interior index -> lattice index

  int lattice_index(int ix, int iy, int iz) const { return (ix * n1 + iy) * n1 + iz; }
  Vec3 node_position(int interior) const {
    int lin = lattice_of[interior];
    int iz = lin % n1, iy = (lin / n1) % n1, ix = lin / (n1 * n1);
    return {-L + ix * h, -L + iy * h, -L + iz * h};
  }
};

FieldGrid build_grid(const DomainSpec& domain, double h);

// Trilinear (cloud-in-cell) transfer stencil over the 8 nodes around a cell.
// Weights carry 1/um^3 so the discrete volume integral of the deposited delta
// is exactly 1; the same weights interpolate the field back at the cell.
struct SourceStencil {
  std::array<std::int32_t, 8> nodes;
  std::array<double, 8> weights;
};

SourceStencil deposit_and_sample(const FieldGrid& grid, const Vec3& position);

inline double sample_field(const FieldGrid& grid, const SourceStencil& s, const Eigen::VectorXd& v) {
  double acc = 0;
  for (int k = 0; k < 8; ++k) acc += s.weights[k] * v[s.nodes[k]];
  return acc * grid.h * grid.h * grid.h;
}

// L2 norm with the volume element, sqrt(h^3 * sum v^2).
double field_l2(const FieldGrid& grid, const Eigen::VectorXd& v);

struct FullOptions {
  double h = 1.0;
  double dt = 5e-3;
  double cg_tol = 1e-9;  // relative residual
  int cg_maxit = 100000;
  bool mass_audit = true;
  bool freeze_cells = false;  // hold x and u fixed (fast-subsystem studies)
  std::function<double(const Vec3&)> initial_field;  // nullptr: start from zero
  std::vector<double> snapshot_times;
  std::filesystem::path snapshot_dir;
  bool snapshot_csv = false;  // also write flat x,y,z,v CSV next to each snapshot
};

// One IMEX time stepper instance: backward-Euler diffusion via conjugate
// gradient on the SPD operator (I + dt*D*(-Lap_h)), explicit exchange and
// reaction terms sampled at the step start.
class FullSim {
 public:
  FullSim(const SystemSpec& spec, const FullOptions& opts);

  void step();
  double t() const { return t_; }
  const FieldGrid& grid() const { return grid_; }
  const Eigen::VectorXd& field() const { return v_; }
  void set_field(Eigen::VectorXd v);
  const Eigen::VectorXd& u() const { return u_; }
  const Eigen::VectorXd& x() const { return x_; }
  const std::vector<SourceStencil>& stencils() const { return stencils_; }

  double sample_at_cell(std::size_t i) const { return sample_field(grid_, stencils_[i], v_); }
  double total_signal_mass() const;  // V*sum(u) + h^3*sum(v)

  // Largest per-step mass-balance residual seen so far, relative to the mass
  // scale of that step (production/degradation/boundary-flux bookkeeping).
  double max_mass_residual() const { return max_mass_residual_; }
  std::int64_t steps_taken() const { return steps_; }

 private:
  int cg_solve(const Eigen::VectorXd& b, Eigen::VectorXd& v) const;

  SystemSpec spec_;
  FullOptions opts_;
  FieldGrid grid_;
  std::vector<SourceStencil> stencils_;
  std::vector<double> volumes_;
  Eigen::VectorXd v_, x_, u_;
  std::vector<int> offsets_;
  double t_ = 0;
  double max_mass_residual_ = 0;
  std::int64_t steps_ = 0;
  mutable Eigen::VectorXd cg_r_, cg_p_, cg_ap_, rhs_, vnew_;
};

Trajectory simulate_full(const SystemSpec& spec, const FullOptions& opts, double t_end,
                         double output_dt);

// Steady state of the coupled (v, u) exchange system for frozen outputs y:
// u is eliminated at its equilibrium, leaving one SPD solve with sink terms
// (V*alpha*gamma_u/(alpha+gamma_u)) at the cells.
struct StaticExchangeResult {
  Eigen::VectorXd field;
  Eigen::VectorXd u;
};
StaticExchangeResult solve_static_exchange(const SystemSpec& spec, const FullOptions& opts,
                                           const Eigen::VectorXd& y);

// Steady field for frozen cell signals u (the fast-subsystem target v*):
// (-D*Lap_h + sum_i V*alpha*h^3*w_i*w_i^T) v = sum_i V*alpha*u_i*w_i.
Eigen::VectorXd solve_static_frozen_u(const SystemSpec& spec, const FullOptions& opts,
                                      const Eigen::VectorXd& u);

// Raw binary snapshot: 32-byte header (magic "DNSF", uint32 nx ny nz, f64 h L),
// then nx*ny*nz little-endian f64 over the full lattice, z fastest, zeros
// outside the domain. The CSV variant is flat x,y,z,v rows.
void write_snapshot_dnsf(const FieldGrid& grid, const Eigen::VectorXd& v,
                         const std::filesystem::path& path);
void write_snapshot_csv(const FieldGrid& grid, const Eigen::VectorXd& v,
                        const std::filesystem::path& path);

}  // namespace diffnet
