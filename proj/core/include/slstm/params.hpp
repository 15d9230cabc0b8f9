#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "slstm/model.hpp"

namespace slstm {

enum class ParamGroup : std::uint8_t { weights, threshold, leak, mem_init, step_bias };
std::string_view to_string(ParamGroup g);

/// Which parameter groups an optimizer step may touch. Masked groups are never
/// written, so they stay bit-identical.
struct TrainMask {
  bool weights = true;
  bool threshold = true;
  bool leak = true;
  bool mem_init = true;
  bool step_bias = false;

  bool allows(ParamGroup g) const;
};

/// View of one parameter tensor inside a model.
struct ParamRef {
  ParamGroup group;
  std::string name;
  double* data;
  Eigen::Index size;
  bool per_neuron;  // LIF vector that scalar mode collapses
};

/// Parameters in a fixed order; a gradient model from zeros_like() yields the
/// same order and sizes.
std::vector<ParamRef> collect_params(AnnModel& model);
std::vector<ParamRef> collect_params(SnnModel& model);

}  // namespace slstm
