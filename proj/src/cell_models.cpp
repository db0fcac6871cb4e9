#include "diffnet/cell_models.hpp"

#include <stdexcept>

namespace diffnet {

ParamPreset paper_sec4_preset() {
  ParamPreset p;
  p.signal = {/*alpha=*/1.0, /*a_u=*/2.0, /*gamma_u=*/0.01};
  p.sender = {/*a_s=*/5.0, /*gamma_s=*/0.01};
  p.receiver = {/*a_r1=*/5.0, /*a_r2=*/2.5,
                /*gamma_r1=*/0.01, /*gamma_r2=*/0.01,
                /*K_1=*/50.0, /*K_2=*/50.0, /*K_u=*/10.0};
  p.R = 1.5;
  p.D = 2.0e4;
  return p;
}

ParamPreset named_preset(const std::string& name) {
  if (name == "paper-sec4") return paper_sec4_preset();
  throw std::invalid_argument("unknown parameter preset: " + name);
}

}  // namespace diffnet
