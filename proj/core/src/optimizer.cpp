#include "slstm/optimizer.hpp"

#include <cmath>
#include <string>

#include "slstm/errors.hpp"

namespace slstm {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw ValidationError("unknown optimizer '" + std::string(s) + "' (expected adam|sgd)");
}

void OptimizerConfig::validate() const {
  if (!(lr > 0)) throw ValidationError("learning rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw ValidationError("Adam betas must lie in [0, 1)");
  if (!(eps > 0)) throw ValidationError("Adam eps must be positive");
  if (!(momentum >= 0 && momentum < 1)) throw ValidationError("momentum must lie in [0, 1)");
}

double clip_global_norm(std::vector<ParamRef>& grads, const TrainMask& mask, double max_norm) {
  double sq = 0;
  for (const auto& g : grads) {
    if (!mask.allows(g.group)) continue;
    sq += Eigen::Map<const Eigen::VectorXd>(g.data, g.size).squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads)
      if (mask.allows(g.group)) Eigen::Map<Eigen::VectorXd>(g.data, g.size) *= scale;
  }
  return norm;
}

void collapse_to_scalar(std::vector<ParamRef>& grads) {
  for (auto& g : grads) {
    if (!g.per_neuron) continue;
    Eigen::Map<Eigen::VectorXd> v(g.data, g.size);
    v.setConstant(v.sum());
  }
}

Optimizer::Optimizer(OptimizerConfig config, const std::vector<ParamRef>& params) : cfg_(config) {
  cfg_.validate();
  for (const auto& p : params) {
    m_.push_back(Eigen::VectorXd::Zero(p.size));
    v_.push_back(Eigen::VectorXd::Zero(p.size));
  }
}

void Optimizer::step(std::vector<ParamRef>& params, const std::vector<ParamRef>& grads,
                     const TrainMask& mask, double lr) {
  if (params.size() != grads.size() || params.size() != m_.size())
    throw ValidationError("optimizer: parameter and gradient lists disagree");
  ++t_;
  const double bc1 = 1 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!mask.allows(params[k].group)) continue;
    if (params[k].size != grads[k].size) throw ValidationError("optimizer: size mismatch at " + params[k].name);
    Eigen::Map<Eigen::VectorXd> p(params[k].data, params[k].size);
    Eigen::Map<const Eigen::VectorXd> g(grads[k].data, grads[k].size);
    if (cfg_.kind == OptimizerKind::sgd) {
      if (cfg_.momentum > 0) {
        m_[k] = cfg_.momentum * m_[k] + g;
        p -= lr * m_[k];
      } else {
        p -= lr * g;
      }
      continue;
    }
    m_[k] = cfg_.beta1 * m_[k] + (1 - cfg_.beta1) * g;
    v_[k] = cfg_.beta2 * v_[k] + (1 - cfg_.beta2) * g.cwiseAbs2();
    p.array() -= lr * (m_[k].array() / bc1) / ((v_[k].array() / bc2).sqrt() + cfg_.eps);
  }
}

void clamp_lif(SnnModel& model, double eps) {
  for (auto& cell : model.layers)
    for (int k = 0; k < kUnitCount; ++k) {
      if (!cell.plan.spiking(static_cast<Unit>(k))) continue;
      auto& p = cell.params[k];
      p.threshold_pos = p.threshold_pos.cwiseMax(eps);
      if (p.ternary()) p.threshold_neg = p.threshold_neg.cwiseMin(-eps);
      p.leak = p.leak.cwiseMax(eps);
    }
}

}  // namespace slstm
