#pragma once

#include <filesystem>

#include "diffnet/core_types.hpp"

namespace diffnet {

// Dirichlet Green's function of the ball by the method of images, evaluated at
// probe for a unit point source at `source`. The probe may lie on the boundary
// (the image construction returns 0 there); the source must be interior.
double green_pair(const DomainSpec& domain, const Vec3& source, const Vec3& probe);

// Regularized self-interaction: free-space part volume-averaged over the cell
// ball of radius R, image part evaluated at the center.
double green_self(const DomainSpec& domain, const Vec3& position, double R);

struct GreenMatrix {
  Eigen::MatrixXd entries;  // (N+M)x(N+M), min/um^3
  DomainSpec domain;
  std::vector<Vec3> positions;
};

GreenMatrix assemble_green(const DomainSpec& domain, const std::vector<CellSpec>& cells);

struct GainMatrix {
  Eigen::MatrixXd entries;   // the communication gain (dimensionless)
  Eigen::MatrixXd field_op;  // V*alpha*G*(I + V*alpha*G)^-1, maps U to nu
  GreenMatrix source_green;
  SignalParams signal;
  double V = 0;  // cell volume (um^3)
};

// Gain = (I - (V a^2/(a+g_u)) G (I + V a G)^-1)^-1 * a_u/(a+g_u). Factorizations
// use partial pivoting; a reciprocal-condition estimate below 1e-12 is an error.
GainMatrix assemble_gain(const GreenMatrix& green, const SignalParams& signal, double V);

// Quasi-steady field evaluated at arbitrary probes for cell signal levels U:
// at cell positions the matrix form nu = V*alpha*G(I + V*alpha*G)^-1 U, away from
// cells the superposition v(r) = V*alpha * sum_j g(r, l_j) (u_j - nu_j).
Eigen::VectorXd static_field(const GreenMatrix& green, const SignalParams& signal, double V,
                             const Eigen::VectorXd& U, const std::vector<Vec3>& probes);

// Row-major CSV with a header row of cell indices (shared by both matrices).
void export_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);

}  // namespace diffnet
