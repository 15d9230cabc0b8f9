#include "slstm/params.hpp"

namespace slstm {

std::string_view to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::weights: return "weights";
    case ParamGroup::threshold: return "threshold";
    case ParamGroup::leak: return "leak";
    case ParamGroup::mem_init: return "mem_init";
    case ParamGroup::step_bias: return "step_bias";
  }
  return "?";
}

bool TrainMask::allows(ParamGroup g) const {
  switch (g) {
    case ParamGroup::weights: return weights;
    case ParamGroup::threshold: return threshold;
    case ParamGroup::leak: return leak;
    case ParamGroup::mem_init: return mem_init;
    case ParamGroup::step_bias: return step_bias;
  }
  return false;
}

namespace {

void add(std::vector<ParamRef>& out, ParamGroup g, std::string name, Eigen::MatrixXd& m) {
  out.push_back({g, std::move(name), m.data(), m.size(), false});
}

void add(std::vector<ParamRef>& out, ParamGroup g, std::string name, Eigen::VectorXd& v,
         bool per_neuron = false) {
  out.push_back({g, std::move(name), v.data(), v.size(), per_neuron});
}

void add_weights(std::vector<ParamRef>& out, const std::string& prefix, LSTMWeights& w) {
  add(out, ParamGroup::weights, prefix + ".wx", w.wx);
  add(out, ParamGroup::weights, prefix + ".wh", w.wh);
  add(out, ParamGroup::weights, prefix + ".b", w.b);
}

void add_head(std::vector<ParamRef>& out, ClassifierHead& head) {
  for (std::size_t l = 0; l < head.layers.size(); ++l) {
    const std::string p = "head" + std::to_string(l);
    add(out, ParamGroup::weights, p + ".w", head.layers[l].w);
    add(out, ParamGroup::weights, p + ".b", head.layers[l].b);
  }
}

}  // namespace

std::vector<ParamRef> collect_params(AnnModel& model) {
  std::vector<ParamRef> out;
  for (std::size_t l = 0; l < model.layers.size(); ++l)
    add_weights(out, "layer" + std::to_string(l), model.layers[l]);
  add_head(out, model.head);
  return out;
}

std::vector<ParamRef> collect_params(SnnModel& model) {
  std::vector<ParamRef> out;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& cell = model.layers[l];
    const std::string prefix = "layer" + std::to_string(l);
    add_weights(out, prefix, cell.weights);
    for (int k = 0; k < kUnitCount; ++k) {
      if (!cell.plan.spiking(static_cast<Unit>(k))) continue;
      auto& p = cell.params[k];
      const std::string u = prefix + "." + std::string(to_string(static_cast<Unit>(k)));
      add(out, ParamGroup::threshold, u + ".threshold_pos", p.threshold_pos, true);
      if (p.ternary()) add(out, ParamGroup::threshold, u + ".threshold_neg", p.threshold_neg, true);
      add(out, ParamGroup::leak, u + ".leak", p.leak, true);
      add(out, ParamGroup::step_bias, u + ".step_bias", p.step_bias, true);
      add(out, ParamGroup::mem_init, u + ".mem_init", p.mem_init, true);
    }
  }
  add_head(out, model.head);
  return out;
}

}  // namespace slstm
