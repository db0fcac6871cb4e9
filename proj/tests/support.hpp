#pragma once

#include "diffnet/cell_models.hpp"
#include "diffnet/core_types.hpp"

namespace testbed {

// The standard two-cell layout used across the suites: one sender at the
// origin, one receiver at (15,0,0) inside the L = 20 um ball, preset
// parameters, LuxI(0) = 400, (LacI, TetR)(0) = (300, 1), u(0) = 0.
inline diffnet::SystemSpec two_cell_spec() {
  const diffnet::ParamPreset p = diffnet::paper_sec4_preset();
  diffnet::SystemSpec spec;
  spec.domain = {20.0, p.D};
  spec.signal = p.signal;
  spec.sender_params = p.sender;
  spec.receiver_params = p.receiver;
  spec.cells = {
      {{0.0, 0.0, 0.0}, diffnet::CellKind::Sender, p.R},
      {{15.0, 0.0, 0.0}, diffnet::CellKind::Receiver, p.R},
  };
  spec.initial_state = {{400.0}, {300.0, 1.0}};
  spec.initial_u = {0.0, 0.0};
  return spec;
}

inline bool has_issue(const diffnet::ValidationReport& rep, const std::string& code) {
  for (const auto& issue : rep.issues)
    if (issue.code == code) return true;
  return false;
}

}  // namespace testbed
