#include "slstm/neuron.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slstm/errors.hpp"

namespace slstm {

namespace {

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

void check_finite(const Eigen::MatrixXd& membrane) {
  for (Eigen::Index j = 0; j < membrane.cols(); ++j)
    for (Eigen::Index i = 0; i < membrane.rows(); ++i)
      if (!std::isfinite(membrane(i, j))) throw NumericFault("non-finite membrane potential", i);
}

}  // namespace

void HardActConfig::validate() const {
  if (!(v_sig > 0)) throw ValidationError("v_sig must be positive");
  if (!(v_tanh_pos > 0)) throw ValidationError("v_tanh_pos must be positive");
  if (!(v_tanh_neg < 0)) throw ValidationError("v_tanh_neg must be negative");
}

double hard_sigmoid(double z, const HardActConfig& cfg) {
  return clip(z / cfg.v_sig + 0.5, 0.0, 1.0);
}

double hard_tanh(double z, const HardActConfig& cfg) {
  if (z >= 0) return clip(z / cfg.v_tanh_pos, 0.0, 1.0);
  return clip(z / -cfg.v_tanh_neg, -1.0, 0.0);
}

double hard_sigmoid_grad(double z, const HardActConfig& cfg) {
  const double half = 0.5 * cfg.v_sig;
  return (z >= -half && z <= half) ? 1.0 / cfg.v_sig : 0.0;
}

double hard_tanh_grad(double z, const HardActConfig& cfg) {
  if (z >= 0) return z <= cfg.v_tanh_pos ? 1.0 / cfg.v_tanh_pos : 0.0;
  return z >= cfg.v_tanh_neg ? 1.0 / -cfg.v_tanh_neg : 0.0;
}

LIFGateParams LIFGateParams::sigmoid(Eigen::Index units, double threshold, double step_bias,
                                     double mem_init, double leak, double gamma) {
  LIFGateParams p;
  p.leak = Eigen::VectorXd::Constant(units, leak);
  p.threshold_pos = Eigen::VectorXd::Constant(units, threshold);
  p.step_bias = Eigen::VectorXd::Constant(units, step_bias);
  p.mem_init = Eigen::VectorXd::Constant(units, mem_init);
  p.surrogate_gamma = gamma;
  return p;
}

LIFGateParams LIFGateParams::tanh(Eigen::Index units, double threshold_pos, double threshold_neg,
                                  double step_bias, double mem_init, double leak, double gamma) {
  LIFGateParams p = sigmoid(units, threshold_pos, step_bias, mem_init, leak, gamma);
  p.threshold_neg = Eigen::VectorXd::Constant(units, threshold_neg);
  return p;
}

void LIFGateParams::validate() const {
  const Eigen::Index n = units();
  if (threshold_pos.size() != n || step_bias.size() != n || mem_init.size() != n ||
      (ternary() && threshold_neg.size() != n))
    throw ValidationError("LIF parameter vectors disagree in length");
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(leak[k] > 0)) throw DomainError("leak must be positive at unit " + std::to_string(k));
    if (!(threshold_pos[k] > 0))
      throw DomainError("positive threshold must be positive at unit " + std::to_string(k));
    if (ternary() && !(threshold_neg[k] < 0))
      throw DomainError("negative threshold must be negative at unit " + std::to_string(k));
  }
  if (!(surrogate_gamma >= 0)) throw DomainError("surrogate gamma must be nonnegative");
}

SpikeTrain::SpikeTrain(SpikeKind kind, Eigen::Index steps, Eigen::Index units)
    : kind_(kind), steps_(steps), units_(units),
      values_(static_cast<std::size_t>(steps * units), 0) {}

void SpikeTrain::set(Eigen::Index step, Eigen::Index unit, std::int8_t value) {
  const bool ok = kind_ == SpikeKind::binary ? (value == 0 || value == 1)
                                             : (value >= -1 && value <= 1);
  if (!ok) throw ValidationError("spike value outside the train's alphabet");
  values_[index(step, unit)] = value;
}

Eigen::VectorXd SpikeTrain::row(Eigen::Index step) const {
  Eigen::VectorXd out(units_);
  for (Eigen::Index u = 0; u < units_; ++u) out[u] = at(step, u);
  return out;
}

std::int64_t SpikeTrain::count_nonzero() const {
  return std::count_if(values_.begin(), values_.end(), [](std::int8_t v) { return v != 0; });
}

void fire(Eigen::MatrixXd& membrane, const Eigen::MatrixXd& pre_act, const LIFGateParams& params,
          SpikeMode mode, Eigen::MatrixXd& spikes, FireRecord* record) {
  const Eigen::Index units = membrane.rows();
  const Eigen::Index batch = membrane.cols();
  const bool ternary = params.ternary();
  const double gamma = params.surrogate_gamma;
  spikes.resize(units, batch);
  if (record) {
    record->u_prev = membrane;
    record->u_temp.resize(units, batch);
    record->s_pos.resize(units, batch);
    if (ternary) record->s_neg.resize(units, batch);
  }
  for (Eigen::Index j = 0; j < batch; ++j) {
    for (Eigen::Index i = 0; i < units; ++i) {
      const double u = params.leak[i] * membrane(i, j) + pre_act(i, j) + params.step_bias[i];
      const double th_pos = params.threshold_pos[i];
      double s_pos = 0.0;
      double s_neg = 0.0;
      if (mode == SpikeMode::heaviside) {
        s_pos = u > th_pos ? 1.0 : 0.0;
        if (ternary) s_neg = u < params.threshold_neg[i] ? 1.0 : 0.0;
      } else {
        s_pos = gamma * detail::ramp((u - th_pos) / th_pos);
        if (ternary) {
          const double th_neg = params.threshold_neg[i];
          s_neg = gamma * detail::ramp((th_neg - u) / -th_neg);
        }
      }
      double next = u - th_pos * s_pos;
      if (ternary) next -= params.threshold_neg[i] * s_neg;
      membrane(i, j) = next;
      spikes(i, j) = s_pos - s_neg;
      if (record) {
        record->u_temp(i, j) = u;
        record->s_pos(i, j) = s_pos;
        if (ternary) record->s_neg(i, j) = s_neg;
      }
    }
  }
  check_finite(membrane);
}

Eigen::MatrixXd initial_membrane(const LIFGateParams& params, Eigen::Index batch) {
  return params.mem_init.replicate(1, batch);
}

namespace {

Eigen::VectorXi step_neuron(NeuronState& state, const Eigen::VectorXd& pre_act,
                            const LIFGateParams& params) {
  if (state.membrane.size() != pre_act.size() || pre_act.size() != params.units())
    throw ValidationError("neuron state, input and parameters disagree in length");
  Eigen::MatrixXd membrane = state.membrane;
  Eigen::MatrixXd spikes;
  fire(membrane, pre_act, params, SpikeMode::heaviside, spikes);
  state.membrane = membrane.col(0);
  return spikes.col(0).cast<int>();
}

}  // namespace

Eigen::VectorXi step_sigmoid_neuron(NeuronState& state, const Eigen::VectorXd& pre_act,
                                    const LIFGateParams& params) {
  if (params.ternary()) throw ValidationError("sigmoid neuron given ternary parameters");
  return step_neuron(state, pre_act, params);
}

Eigen::VectorXi step_tanh_neuron(NeuronState& state, const Eigen::VectorXd& pre_act,
                                 const LIFGateParams& params) {
  if (!params.ternary()) throw ValidationError("tanh neuron requires a negative threshold");
  return step_neuron(state, pre_act, params);
}

double if_avg_sigmoid(double z_bar, int time_steps, double v, double shift) {
  const double t = time_steps;
  return clip(std::floor(t / v * (z_bar + shift + v / 2)), 0.0, t) / t;
}

double if_avg_tanh(double z_bar, int time_steps, const HardActConfig& cfg, double shift_pos,
                   double shift_neg) {
  const double t = time_steps;
  if (z_bar > 0) return clip(std::floor(t / cfg.v_tanh_pos * (z_bar + shift_pos)), 0.0, t) / t;
  const double mag = std::abs(z_bar) + std::abs(shift_neg);
  return -clip(std::floor(t / std::abs(cfg.v_tanh_neg) * mag), 0.0, t) / t;
}

std::optional<std::int64_t> lif_first_spike_time(double z_bar, double v, double leak) {
  if (!(leak > 0)) throw DomainError("leak must be positive");
  if (!(v > 0)) throw DomainError("threshold must be positive");
  if (z_bar <= 0) return std::nullopt;
  if (leak == 1.0) return static_cast<std::int64_t>(std::ceil(v / z_bar));
  if (z_bar <= v * (1 - leak)) return std::nullopt;
  const double arg = 1 - v * (1 - leak) / z_bar;
  return static_cast<std::int64_t>(std::ceil(std::log(arg) / std::log(leak)));
}

double lif_avg_sigmoid(double z_bar, int time_steps, double v, double leak) {
  const auto t = lif_first_spike_time(z_bar, v, leak);
  if (!t) return 0.0;
  return std::floor(static_cast<double>(time_steps) / static_cast<double>(*t)) / time_steps;
}

double surrogate_grad(double u, double v_th, double gamma) {
  if (v_th == 0) throw DomainError("surrogate threshold must be nonzero");
  return gamma / std::abs(v_th) * std::max(0.0, 1.0 - std::abs(u / v_th - 1.0));
}

double surrogate_ramp(double u, double v_th, double gamma) {
  if (v_th == 0) throw DomainError("surrogate threshold must be nonzero");
  return gamma * detail::ramp(u / v_th - 1.0);
}

double optimal_shift(double v_th, int time_steps) { return v_th / (2.0 * time_steps); }

}  // namespace slstm
