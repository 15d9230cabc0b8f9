#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace slstm {

/// Scales of the clipped activations. The hard sigmoid saturates at +-v_sig/2,
/// the hard tanh at v_tanh_pos (output +1) and v_tanh_neg (output -1).
struct HardActConfig {
  double v_sig = 4.0;
  double v_tanh_pos = 1.0;
  double v_tanh_neg = -1.0;

  void validate() const;
};

double hard_sigmoid(double z, const HardActConfig& cfg);
double hard_tanh(double z, const HardActConfig& cfg);

// Subgradients; at a clip kink the slope of the linear side is returned.
double hard_sigmoid_grad(double z, const HardActConfig& cfg);
double hard_tanh_grad(double z, const HardActConfig& cfg);

/// Trainable parameters of one spiking gate, one entry per neuron.
///
/// `threshold_neg` is empty for sigmoid-type (binary) gates and populated for
/// tanh-type (ternary) gates. The membrane update per step is
///   U <- leak * U + pre_act + step_bias
/// followed by a strict threshold comparison and reset by subtraction.
struct LIFGateParams {
  Eigen::VectorXd leak;
  Eigen::VectorXd threshold_pos;
  Eigen::VectorXd threshold_neg;
  Eigen::VectorXd step_bias;
  Eigen::VectorXd mem_init;
  double surrogate_gamma = 0.3;

  static LIFGateParams sigmoid(Eigen::Index units, double threshold, double step_bias = 0.0,
                               double mem_init = 0.0, double leak = 1.0, double gamma = 0.3);
  static LIFGateParams tanh(Eigen::Index units, double threshold_pos, double threshold_neg,
                            double step_bias = 0.0, double mem_init = 0.0, double leak = 1.0,
                            double gamma = 0.3);

  Eigen::Index units() const noexcept { return leak.size(); }
  bool ternary() const noexcept { return threshold_neg.size() != 0; }
  void validate() const;
};

struct NeuronState {
  Eigen::VectorXd membrane;

  static NeuronState from(const LIFGateParams& params) { return {params.mem_init}; }
};

enum class SpikeKind : std::uint8_t { binary, ternary };

/// Spike record over time: values(step, unit) in {0,1} or {-1,0,1}.
class SpikeTrain {
 public:
  SpikeTrain() = default;
  SpikeTrain(SpikeKind kind, Eigen::Index steps, Eigen::Index units);

  SpikeKind kind() const noexcept { return kind_; }
  Eigen::Index steps() const noexcept { return steps_; }
  Eigen::Index units() const noexcept { return units_; }

  std::int8_t at(Eigen::Index step, Eigen::Index unit) const { return values_[index(step, unit)]; }
  void set(Eigen::Index step, Eigen::Index unit, std::int8_t value);

  /// Row `step` as a dense vector of doubles.
  Eigen::VectorXd row(Eigen::Index step) const;
  std::int64_t count_nonzero() const;

 private:
  std::size_t index(Eigen::Index step, Eigen::Index unit) const {
    return static_cast<std::size_t>(step * units_ + unit);
  }

  SpikeKind kind_ = SpikeKind::binary;
  Eigen::Index steps_ = 0;
  Eigen::Index units_ = 0;
  std::vector<std::int8_t> values_;
};

/// One step of a binary (sigmoid-type) neuron population. Mutates `state`.
Eigen::VectorXi step_sigmoid_neuron(NeuronState& state, const Eigen::VectorXd& pre_act,
                                    const LIFGateParams& params);

/// One step of a ternary (tanh-type) neuron population. Mutates `state`.
Eigen::VectorXi step_tanh_neuron(NeuronState& state, const Eigen::VectorXd& pre_act,
                                 const LIFGateParams& params);

// ---------------------------------------------------------------------------
// Batched kernels used by the cell. Matrices are [units x batch].

/// Heaviside is the real spiking forward. Relaxed replaces every Heaviside by the
/// ramp whose derivative is the triangular surrogate; it only exists so that
/// surrogate BPTT can be checked against finite differences.
enum class SpikeMode : std::uint8_t { heaviside, relaxed };

struct FireRecord {
  Eigen::MatrixXd u_prev;  // membrane before the step
  Eigen::MatrixXd u_temp;  // membrane after integration, before reset
  Eigen::MatrixXd s_pos;   // positive spike (0/1 or relaxed)
  Eigen::MatrixXd s_neg;   // negative spike magnitude, ternary gates only
};

/// Integrates `pre_act`, fires and resets. `spikes` receives s_pos - s_neg.
void fire(Eigen::MatrixXd& membrane, const Eigen::MatrixXd& pre_act, const LIFGateParams& params,
          SpikeMode mode, Eigen::MatrixXd& spikes, FireRecord* record = nullptr);

/// Membrane reset to mem_init, broadcast over `batch` columns.
Eigen::MatrixXd initial_membrane(const LIFGateParams& params, Eigen::Index batch);

// ---------------------------------------------------------------------------
// Closed forms.

double if_avg_sigmoid(double z_bar, int time_steps, double v, double shift);
double if_avg_tanh(double z_bar, int time_steps, const HardActConfig& cfg, double shift_pos,
                   double shift_neg);

/// First tick at which a zero-initialised LIF membrane driven by a constant
/// `z_bar` exceeds `v`; nullopt when it never does.
std::optional<std::int64_t> lif_first_spike_time(double z_bar, double v, double leak);
double lif_avg_sigmoid(double z_bar, int time_steps, double v, double leak);

/// (gamma/|v_th|) * max(0, 1 - |u/v_th - 1|).
double surrogate_grad(double u, double v_th, double gamma);

/// gamma * ramp(u/v_th - 1): antiderivative of surrogate_grad in u, zero below
/// the support and gamma above it.
double surrogate_ramp(double u, double v_th, double gamma);

double optimal_shift(double v_th, int time_steps);

namespace detail {
inline double triangle(double x) { return x <= -1.0 || x >= 1.0 ? 0.0 : 1.0 - (x < 0 ? -x : x); }
inline double ramp(double x) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (x <= 0.0) return 0.5 * (1.0 + x) * (1.0 + x);
  return 1.0 - 0.5 * (1.0 - x) * (1.0 - x);
}
}  // namespace detail

}  // namespace slstm
