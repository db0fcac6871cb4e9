#include "diffnet/core_types.hpp"

#include <cmath>
#include <stdexcept>

namespace diffnet {

std::size_t num_senders(const SystemSpec& spec) {
  std::size_t n = 0;
  for (const auto& c : spec.cells)
    if (c.kind == CellKind::Sender) ++n;
  return n;
}

std::size_t num_receivers(const SystemSpec& spec) { return spec.cells.size() - num_senders(spec); }

namespace {

void check_cells(const SystemSpec& spec, ValidationReport& rep) {
  const double L = spec.domain.L;
  bool seen_receiver = false;
  for (std::size_t i = 0; i < spec.cells.size(); ++i) {
    const CellSpec& c = spec.cells[i];
    if (c.R <= 0)
      rep.issues.push_back({"cell radius nonpositive", "cell " + std::to_string(i)});
    if (c.position.norm() >= L - c.R)
      rep.issues.push_back({"cell outside domain",
                            "cell " + std::to_string(i) + " at ||l|| = " + std::to_string(c.position.norm()) +
                                " violates ||l|| < L - R"});
    if (c.kind == CellKind::Receiver) seen_receiver = true;
    else if (seen_receiver)
      rep.issues.push_back({"cell ordering", "sender at index " + std::to_string(i) + " follows a receiver"});
  }
  for (std::size_t i = 0; i < spec.cells.size(); ++i)
    for (std::size_t j = i + 1; j < spec.cells.size(); ++j) {
      double d = (spec.cells[i].position - spec.cells[j].position).norm();
      if (d <= spec.cells[i].R + spec.cells[j].R)
        rep.issues.push_back({"cell overlap", "cells " + std::to_string(i) + " and " + std::to_string(j) +
                                                  " are " + std::to_string(d) + " um apart"});
    }
}

void check_params(const SystemSpec& spec, ValidationReport& rep) {
  if (!(spec.domain.L > 0)) rep.issues.push_back({"domain radius nonpositive", ""});
  if (!(spec.domain.D > 0)) rep.issues.push_back({"diffusivity nonpositive", ""});
  const SignalParams& s = spec.signal;
  if (!(s.alpha > 0)) rep.issues.push_back({"alpha nonpositive", ""});
  if (s.a_u < 0) rep.issues.push_back({"a_u negative", ""});
  if (s.gamma_u < 0) rep.issues.push_back({"gamma_u negative", ""});
  if (!(s.alpha + s.gamma_u > 0)) rep.issues.push_back({"alpha + gamma_u nonpositive", ""});
  if (num_senders(spec) > 0) {
    if (spec.sender_params.a_s < 0) rep.issues.push_back({"a_s negative", ""});
    if (!(spec.sender_params.gamma_s > 0)) rep.issues.push_back({"gamma_s nonpositive", ""});
  }
  if (num_receivers(spec) > 0) {
    const ReceiverParams& r = spec.receiver_params;
    for (auto [v, name] : {std::pair{r.a_r1, "a_r1"}, {r.a_r2, "a_r2"}, {r.gamma_r1, "gamma_r1"},
                           {r.gamma_r2, "gamma_r2"}, {r.K_1, "K_1"}, {r.K_2, "K_2"}, {r.K_u, "K_u"}})
      if (!(v > 0)) rep.issues.push_back({"receiver param nonpositive", name});
  }
}

void check_initial(const SystemSpec& spec, ValidationReport& rep) {
  if (spec.initial_state.size() != spec.cells.size()) {
    rep.issues.push_back({"initial state count mismatch", ""});
    return;
  }
  for (std::size_t i = 0; i < spec.cells.size(); ++i)
    if (static_cast<int>(spec.initial_state[i].size()) != state_dim(spec.cells[i].kind))
      rep.issues.push_back({"initial state dimension mismatch", "cell " + std::to_string(i)});
  if (spec.initial_u.size() != spec.cells.size())
    rep.issues.push_back({"initial u count mismatch", ""});
}

}  // namespace

ValidationReport validate(const SystemSpec& spec) {
  ValidationReport rep;
  check_params(spec, rep);
  check_cells(spec, rep);
  check_initial(spec, rep);
  return rep;
}

double output_map(CellKind kind, const Eigen::VectorXd& state) {
  if (state.size() != state_dim(kind)) throw std::invalid_argument("output_map: state dimension mismatch");
  return kind == CellKind::Sender ? state[state.size() - 1] : 0.0;
}

double output_map(const SystemSpec& spec, std::size_t cell_index, const Eigen::VectorXd& state) {
  if (cell_index >= spec.cells.size()) throw std::out_of_range("output_map: cell index");
  return output_map(spec.cells[cell_index].kind, state);
}

Trajectory make_trajectory_layout(const SystemSpec& spec) {
  Trajectory t;
  t.kinds.reserve(spec.cells.size());
  t.offsets.reserve(spec.cells.size());
  int off = 0;
  for (const auto& c : spec.cells) {
    t.kinds.push_back(c.kind);
    t.offsets.push_back(off);
    off += state_dim(c.kind);
  }
  return t;
}

Eigen::VectorXd stack_initial_state(const SystemSpec& spec) {
  int dim = 0;
  for (const auto& c : spec.cells) dim += state_dim(c.kind);
  Eigen::VectorXd x(dim);
  int off = 0;
  for (std::size_t i = 0; i < spec.cells.size(); ++i) {
    const auto& init = spec.initial_state[i];
    for (double val : init) x[off++] = val;
  }
  return x;
}

}  // namespace diffnet
