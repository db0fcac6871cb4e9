#include "diffnet/greens_kernel.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "diffnet/errors.hpp"
#include "diffnet/util.hpp"

namespace diffnet {

namespace {

constexpr double kPi = std::numbers::pi;

void run_rows_parallel(int n, int workers, const std::function<void(int)>& row_job) {
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) row_job(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) row_job(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

double green_pair(const DomainSpec& domain, const Vec3& source, const Vec3& probe) {
  const double L = domain.L;
  const double rs = source.norm();
  const double rp = probe.norm();
  if (rs >= L) throw std::invalid_argument("green_pair: source outside domain");
  if (rp > L * (1.0 + 1e-12)) throw std::invalid_argument("green_pair: probe outside domain");
  const double dist = (probe - source).norm();
  if (dist == 0) throw std::invalid_argument("green_pair: coincident source and probe (use green_self)");
  const double pref = 1.0 / (4.0 * kPi * domain.D);
  if (rs < 1e-9 * L) {
    // Source at the center: the image recedes to infinity; use the radial limit.
    return pref * (1.0 / rp - 1.0 / L);
  }
  const Vec3 image = (L * L / (rs * rs)) * source;
  const double dist_im = (probe - image).norm();
  return pref * (1.0 / dist - (L / rs) / dist_im);
}

double green_self(const DomainSpec& domain, const Vec3& position, double R) {
  const double L = domain.L;
  const double r = position.norm();
  if (r >= L - R) throw std::invalid_argument("green_self: cell within R of boundary");
  return 3.0 / (8.0 * kPi * domain.D * R) - L / (4.0 * kPi * domain.D * (L * L - r * r));
}

GreenMatrix assemble_green(const DomainSpec& domain, const std::vector<CellSpec>& cells) {
  const int n = static_cast<int>(cells.size());
  GreenMatrix g;
  g.domain = domain;
  g.positions.reserve(cells.size());
  for (const auto& c : cells) g.positions.push_back(c.position);
  g.entries.resize(n, n);
  run_rows_parallel(n, worker_count(0), [&](int i) {
    g.entries(i, i) = green_self(domain, cells[i].position, cells[i].R);
    for (int j = i + 1; j < n; ++j) {
      double v = green_pair(domain, cells[i].position, cells[j].position);
      g.entries(i, j) = v;
      g.entries(j, i) = v;
    }
  });
  return g;
}

GainMatrix assemble_gain(const GreenMatrix& green, const SignalParams& signal, double V) {
  const Eigen::Index n = green.entries.rows();
  const double Va = V * signal.alpha;
  const double denom = signal.alpha + signal.gamma_u;
  if (denom <= 0) throw std::invalid_argument("assemble_gain: alpha + gamma_u must be positive");

  Eigen::MatrixXd B = Va * green.entries;
  B.diagonal().array() += 1.0;  // I + V*alpha*G
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_b(B);
  double rc = lu_b.rcond();
  if (!(rc > 1e-12))
    throw SolverError("assemble_gain: (I + V*alpha*G) ill-conditioned, estimate " +
                      format_double(1.0 / rc));

  // G and (I + V*alpha*G) commute, so the left and right quotients coincide and
  // the solve below yields G (I + V*alpha*G)^-1 directly.
  Eigen::MatrixXd X = lu_b.solve(green.entries);

  Eigen::MatrixXd C = (-V * signal.alpha * signal.alpha / denom) * X;
  C.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_c(C);
  rc = lu_c.rcond();
  if (!(rc > 1e-12))
    throw SolverError("assemble_gain: gain system ill-conditioned, estimate " +
                      format_double(1.0 / rc));

  GainMatrix gain;
  gain.entries = lu_c.solve((signal.a_u / denom) * Eigen::MatrixXd::Identity(n, n));
  gain.field_op = Va * X;
  gain.source_green = green;
  gain.signal = signal;
  gain.V = V;
  if (!gain.entries.allFinite()) throw SolverError("assemble_gain: non-finite entries");
  return gain;
}

Eigen::VectorXd static_field(const GreenMatrix& green, const SignalParams& signal, double V,
                             const Eigen::VectorXd& U, const std::vector<Vec3>& probes) {
  const Eigen::Index n = green.entries.rows();
  if (U.size() != n) throw std::invalid_argument("static_field: U length mismatch");
  const double Va = V * signal.alpha;
  Eigen::MatrixXd B = Va * green.entries;
  B.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_b(B);
  if (!(lu_b.rcond() > 1e-12)) throw SolverError("static_field: (I + V*alpha*G) ill-conditioned");
  Eigen::VectorXd nu = lu_b.solve(Va * (green.entries * U));

  Eigen::VectorXd out(static_cast<Eigen::Index>(probes.size()));
  const double tol = 1e-9 * green.domain.L;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    Eigen::Index at_cell = -1;
    for (Eigen::Index j = 0; j < n; ++j)
      if ((probes[p] - green.positions[j]).norm() <= tol) {
        at_cell = j;
        break;
      }
    if (at_cell >= 0) {
      out[p] = nu[at_cell];
      continue;
    }
    double v = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      v += green_pair(green.domain, green.positions[j], probes[p]) * (U[j] - nu[j]);
    out[p] = Va * v;
  }
  return out;
}

void export_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "cell";
  for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << j;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
    out << '\n';
  }
  atomic_write_file(path, out.str());
}

}  // namespace diffnet
