#pragma once

#include <string_view>
#include <vector>

#include "slstm/params.hpp"

namespace slstm {

enum class OptimizerKind : std::uint8_t { adam, sgd };
std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum = 0.0;  // sgd only

  void validate() const;
};

/// Global L2 norm over the unmasked gradients; rescales them to `max_norm` when
/// it is exceeded. Returns the norm before clipping. max_norm <= 0 disables.
double clip_global_norm(std::vector<ParamRef>& grads, const TrainMask& mask, double max_norm);

/// Replaces every per-neuron LIF gradient by its sum broadcast to all neurons.
void collapse_to_scalar(std::vector<ParamRef>& grads);

class Optimizer {
 public:
  Optimizer(OptimizerConfig config, const std::vector<ParamRef>& params);

  /// Updates unmasked params in place; masked ones are not touched.
  void step(std::vector<ParamRef>& params, const std::vector<ParamRef>& grads, const TrainMask& mask,
            double lr);
  long steps() const { return t_; }

 private:
  OptimizerConfig cfg_;
  std::vector<Eigen::VectorXd> m_, v_;
  long t_ = 0;
};

/// Keeps LIF parameters in their domain after an update: threshold_pos >= eps,
/// threshold_neg <= -eps, leak >= eps.
void clamp_lif(SnnModel& model, double eps = 1e-3);

}  // namespace slstm
