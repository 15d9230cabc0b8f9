#include "slstm/model.hpp"

#include <cmath>
#include <string>

#include "slstm/errors.hpp"

namespace slstm {

std::string_view to_string(Gate g) {
  switch (g) {
    case Gate::f: return "f";
    case Gate::i: return "i";
    case Gate::g: return "g";
    case Gate::o: return "o";
  }
  return "?";
}

std::string_view to_string(Unit u) {
  if (u == Unit::c_tanh) return "c_tanh";
  return to_string(static_cast<Gate>(u));
}

Gate parse_gate(std::string_view s) {
  if (s == "f") return Gate::f;
  if (s == "i") return Gate::i;
  if (s == "g") return Gate::g;
  if (s == "o") return Gate::o;
  throw ValidationError("unknown gate '" + std::string(s) + "'");
}

LSTMWeights LSTMWeights::zeros(Eigen::Index input, Eigen::Index hidden) {
  return {Eigen::MatrixXd::Zero(4 * hidden, input), Eigen::MatrixXd::Zero(4 * hidden, hidden),
          Eigen::VectorXd::Zero(4 * hidden)};
}

LSTMWeights LSTMWeights::random(Eigen::Index input, Eigen::Index hidden, std::mt19937_64& rng) {
  LSTMWeights w = zeros(input, hidden);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto draw = [&] { return (2.0 * uniform01(rng) - 1.0) * bound; };
  for (Eigen::Index j = 0; j < w.wx.cols(); ++j)
    for (Eigen::Index i = 0; i < w.wx.rows(); ++i) w.wx(i, j) = draw();
  for (Eigen::Index j = 0; j < w.wh.cols(); ++j)
    for (Eigen::Index i = 0; i < w.wh.rows(); ++i) w.wh(i, j) = draw();
  for (Eigen::Index i = 0; i < w.b.size(); ++i) w.b[i] = draw();
  return w;
}

void LSTMWeights::validate() const {
  const Eigen::Index h = wh.cols();
  if (h == 0 || wx.cols() == 0) throw ValidationError("LSTM layer with zero width");
  if (wh.rows() != 4 * h || wx.rows() != 4 * h || b.size() != 4 * h)
    throw ValidationError("LSTM weight blocks disagree with hidden size " + std::to_string(h));
  if (!wx.allFinite() || !wh.allFinite() || !b.allFinite())
    throw ValidationError("non-finite LSTM weight");
}

ClassifierHead ClassifierHead::zeros(Eigen::Index input, const std::vector<Eigen::Index>& sizes) {
  if (sizes.empty()) throw ValidationError("classifier head needs at least one layer");
  ClassifierHead head;
  Eigen::Index in = input;
  for (Eigen::Index out : sizes) {
    head.layers.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
    in = out;
  }
  return head;
}

ClassifierHead ClassifierHead::random(Eigen::Index input, const std::vector<Eigen::Index>& sizes,
                                      std::mt19937_64& rng) {
  ClassifierHead head = zeros(input, sizes);
  for (auto& layer : head.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.w.cols()));
    for (Eigen::Index j = 0; j < layer.w.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.w.rows(); ++i)
        layer.w(i, j) = (2.0 * uniform01(rng) - 1.0) * bound;
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b[i] = (2.0 * uniform01(rng) - 1.0) * bound;
  }
  return head;
}

Eigen::MatrixXd ClassifierHead::forward(const Eigen::MatrixXd& in) const {
  Eigen::MatrixXd a = in;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].w * a;
    z.colwise() += layers[l].b;
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

void ClassifierHead::validate() const {
  if (layers.empty()) throw ValidationError("classifier head needs at least one layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].b.size() != layers[l].w.rows())
      throw ValidationError("head layer " + std::to_string(l) + " bias size mismatch");
    if (l > 0 && layers[l].w.cols() != layers[l - 1].w.rows())
      throw ValidationError("head layer " + std::to_string(l) + " input size mismatch");
  }
}

void AnnModel::validate() const {
  act.validate();
  if (layers.empty()) throw ValidationError("model has no LSTM layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].validate();
    if (l > 0 && layers[l].input() != layers[l - 1].hidden())
      throw ValidationError("layer " + std::to_string(l) + " input disagrees with previous hidden size");
  }
  head.validate();
  if (head.input_dim() != layers.back().hidden())
    throw ValidationError("head input disagrees with last hidden size");
}

ConversionPlan ConversionPlan::with_analog(Gate analog) {
  if (analog != Gate::i && analog != Gate::g)
    throw ValidationError("analog gate must be i or g");
  std::uint8_t flags = 0x1F;
  flags &= static_cast<std::uint8_t>(~(1U << index(analog)));
  return ConversionPlan(flags);
}

void ConversionPlan::validate() const {
  if (!spiking(Unit::f))
    throw MultiplierAuditError("plan leaves f analog: f*c_prev would be multi-bit x multi-bit");
  if (!spiking(Unit::o) || !spiking(Unit::c_tanh))
    throw MultiplierAuditError("plan leaves o or c_tanh analog: hidden state would be multi-bit");
  if (!spiking(Unit::i) && !spiking(Unit::g))
    throw MultiplierAuditError("plan leaves both i and g analog: i*g would be multi-bit x multi-bit");
  if (spiking(Unit::i) && spiking(Unit::g))
    throw ValidationError("plan must keep exactly one of i and g analog");
  if (flags_ & ~0x1FU) throw ValidationError("plan has unknown flag bits");
}

void SpikingLSTMCell::validate() const {
  weights.validate();
  act.validate();
  plan.validate();
  for (int k = 0; k < kUnitCount; ++k) {
    const Unit u = static_cast<Unit>(k);
    const auto& p = params[k];
    if (!plan.spiking(u)) continue;
    if (p.units() != hidden())
      throw ValidationError("unit " + std::string(to_string(u)) + " parameters have wrong length");
    p.validate();
    if (p.ternary() != is_tanh_unit(u))
      throw ValidationError("unit " + std::string(to_string(u)) +
                            (is_tanh_unit(u) ? " needs a negative threshold"
                                             : " must not carry a negative threshold"));
  }
}

void SnnModel::validate() const {
  if (time_steps < 1) throw ValidationError("time steps must be >= 1");
  if (layers.empty()) throw ValidationError("model has no LSTM layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].validate();
    if (l > 0 && layers[l].input() != layers[l - 1].hidden())
      throw ValidationError("layer " + std::to_string(l) + " input disagrees with previous hidden size");
  }
  head.validate();
  if (head.input_dim() != layers.back().hidden())
    throw ValidationError("head input disagrees with last hidden size");
}

LayerSpikeStats& LayerSpikeStats::operator+=(const LayerSpikeStats& o) {
  cell_steps += o.cell_steps;
  input_events += o.input_events;
  analog_inputs += o.analog_inputs;
  hidden_in_events += o.hidden_in_events;
  hidden_out_events += o.hidden_out_events;
  for (int k = 0; k < kUnitCount; ++k) {
    unit_events[k] += o.unit_events[k];
    auto& mine = neuron_events[k];
    const auto& theirs = o.neuron_events[k];
    if (theirs.empty()) continue;
    if (mine.empty()) mine.assign(theirs.size(), 0);
    for (std::size_t n = 0; n < theirs.size(); ++n) mine[n] += theirs[n];
  }
  return *this;
}

SpikeStats& SpikeStats::operator+=(const SpikeStats& o) {
  if (layers.empty()) layers.resize(o.layers.size());
  if (layers.size() != o.layers.size()) throw ValidationError("spike stats layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) layers[l] += o.layers[l];
  return *this;
}

double SpikeStats::mean_rate(const SnnModel& model) const {
  double events = 0, slots = 0;
  for (std::size_t l = 0; l < layers.size() && l < model.layers.size(); ++l) {
    const auto& cell = model.layers[l];
    for (int k = 0; k < kUnitCount; ++k) {
      if (!cell.plan.spiking(static_cast<Unit>(k))) continue;
      events += static_cast<double>(layers[l].unit_events[k]);
      slots += static_cast<double>(layers[l].cell_steps) * static_cast<double>(cell.hidden());
    }
  }
  return slots > 0 ? events / slots : 0.0;
}

AnnModel stack_layers(const LSTMWeights& layer1, const LSTMWeights& layer2, ClassifierHead head,
                      const HardActConfig& act) {
  if (layer2.input() != layer1.hidden())
    throw ValidationError("stack_layers: layer 2 input " + std::to_string(layer2.input()) +
                          " != layer 1 hidden " + std::to_string(layer1.hidden()));
  AnnModel m{act, {layer1, layer2}, std::move(head)};
  m.validate();
  return m;
}

SnnModel stack_layers(const SpikingLSTMCell& layer1, const SpikingLSTMCell& layer2,
                      ClassifierHead head, int time_steps, Encoding encoding) {
  if (layer2.input() != layer1.hidden())
    throw ValidationError("stack_layers: layer 2 input " + std::to_string(layer2.input()) +
                          " != layer 1 hidden " + std::to_string(layer1.hidden()));
  SnnModel m{{layer1, layer2}, std::move(head), time_steps, encoding};
  m.validate();
  return m;
}

}  // namespace slstm
