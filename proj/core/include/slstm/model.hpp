#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "slstm/encode.hpp"
#include "slstm/neuron.hpp"

namespace slstm {

/// LSTM gates in storage order; weight matrices stack them as row blocks.
enum class Gate : std::uint8_t { f = 0, i = 1, g = 2, o = 3 };
inline constexpr int kGateCount = 4;

/// Everything that can be realised as a spiking neuron inside a cell: the four
/// gates plus the output nonlinearity applied to the cell value.
enum class Unit : std::uint8_t { f = 0, i = 1, g = 2, o = 3, c_tanh = 4 };
inline constexpr int kUnitCount = 5;

constexpr int index(Gate g) { return static_cast<int>(g); }
constexpr int index(Unit u) { return static_cast<int>(u); }
constexpr Unit unit_of(Gate g) { return static_cast<Unit>(g); }
/// g and c_tanh are tanh-type (ternary when spiking); f, i, o are sigmoid-type.
constexpr bool is_tanh_unit(Unit u) { return u == Unit::g || u == Unit::c_tanh; }
std::string_view to_string(Gate g);
std::string_view to_string(Unit u);
Gate parse_gate(std::string_view s);

/// Per-layer LSTM weights, gate blocks stacked in f, i, g, o order.
struct LSTMWeights {
  Eigen::MatrixXd wx;  // [4H x F]
  Eigen::MatrixXd wh;  // [4H x H]
  Eigen::VectorXd b;   // [4H]

  static LSTMWeights zeros(Eigen::Index input, Eigen::Index hidden);
  /// Uniform(-1/sqrt(H), 1/sqrt(H)) on every entry.
  static LSTMWeights random(Eigen::Index input, Eigen::Index hidden, std::mt19937_64& rng);

  Eigen::Index input() const noexcept { return wx.cols(); }
  Eigen::Index hidden() const noexcept { return wh.cols(); }

  auto gate_wx(Gate g) { return wx.middleRows(index(g) * hidden(), hidden()); }
  auto gate_wx(Gate g) const { return wx.middleRows(index(g) * hidden(), hidden()); }
  auto gate_wh(Gate g) { return wh.middleRows(index(g) * hidden(), hidden()); }
  auto gate_wh(Gate g) const { return wh.middleRows(index(g) * hidden(), hidden()); }
  auto gate_b(Gate g) { return b.segment(index(g) * hidden(), hidden()); }
  auto gate_b(Gate g) const { return b.segment(index(g) * hidden(), hidden()); }

  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd w;  // [out x in]
  Eigen::VectorXd b;  // [out]
};

/// Non-spiking classifier: dense layers with ReLU between them, none after the last.
struct ClassifierHead {
  std::vector<DenseLayer> layers;

  static ClassifierHead random(Eigen::Index input, const std::vector<Eigen::Index>& sizes,
                               std::mt19937_64& rng);
  static ClassifierHead zeros(Eigen::Index input, const std::vector<Eigen::Index>& sizes);

  Eigen::Index input_dim() const { return layers.front().w.cols(); }
  Eigen::Index output_dim() const { return layers.back().w.rows(); }
  /// in: [input x batch] -> logits [classes x batch].
  Eigen::MatrixXd forward(const Eigen::MatrixXd& in) const;
  void validate() const;
};

/// Hard-activation (non-spiking) LSTM classifier.
struct AnnModel {
  HardActConfig act;
  std::vector<LSTMWeights> layers;
  ClassifierHead head;

  Eigen::Index input_dim() const { return layers.front().input(); }
  Eigen::Index classes() const { return head.output_dim(); }
  void validate() const;
};

/// Which cell units run as spiking neurons. f, o and c_tanh always spike;
/// exactly one of i and g stays analog so that i*g is a spike-select.
class ConversionPlan {
 public:
  ConversionPlan() : ConversionPlan(with_analog(Gate::i)) {}

  static ConversionPlan with_analog(Gate analog);
  /// Raw construction from flags (bit k set = Unit k spiking). Not validated.
  static ConversionPlan from_flags(std::uint8_t flags) { return ConversionPlan(flags); }

  bool spiking(Unit u) const { return (flags_ >> index(u)) & 1U; }
  std::uint8_t flags() const { return flags_; }
  /// The one of {i, g} left analog. Only meaningful for a valid plan.
  Gate analog_gate() const { return spiking(Unit::i) ? Gate::g : Gate::i; }

  /// Throws MultiplierAuditError when the plan would force a multi-bit x
  /// multi-bit product in the cell.
  void validate() const;

  friend bool operator==(const ConversionPlan&, const ConversionPlan&) = default;

 private:
  explicit ConversionPlan(std::uint8_t flags) : flags_(flags) {}
  std::uint8_t flags_;
};

/// One spiking LSTM layer: weights, per-unit LIF parameters and the plan.
/// `params` of a non-spiking unit are left empty. `act` drives the analog gate.
struct SpikingLSTMCell {
  LSTMWeights weights;
  std::array<LIFGateParams, kUnitCount> params;
  ConversionPlan plan;
  HardActConfig act;

  Eigen::Index hidden() const { return weights.hidden(); }
  Eigen::Index input() const { return weights.input(); }
  void validate() const;
};

struct SnnModel {
  std::vector<SpikingLSTMCell> layers;
  ClassifierHead head;
  int time_steps = 2;
  Encoding encoding = Encoding::direct;

  Eigen::Index input_dim() const { return layers.front().input(); }
  Eigen::Index classes() const { return head.output_dim(); }
  void validate() const;
};

/// Event tallies of one spiking layer, summed over batch columns and steps.
struct LayerSpikeStats {
  std::int64_t cell_steps = 0;       // (element, step, batch column) triples evaluated
  std::int64_t input_events = 0;     // nonzero entries of spiking x_in
  std::int64_t analog_inputs = 0;    // x_in vectors fed in analog (direct encoding)
  std::int64_t hidden_in_events = 0; // nonzero entries of h_in
  std::int64_t hidden_out_events = 0;
  std::array<std::int64_t, kUnitCount> unit_events{};  // nonzero spikes per unit
  /// Per-neuron spike counts per spiking unit (sized H when populated).
  std::array<std::vector<std::int64_t>, kUnitCount> neuron_events;

  LayerSpikeStats& operator+=(const LayerSpikeStats& other);
};

struct SpikeStats {
  std::vector<LayerSpikeStats> layers;

  SpikeStats& operator+=(const SpikeStats& other);
  /// Mean firing rate over all spiking units of all layers.
  double mean_rate(const SnnModel& model) const;
};

/// Layer-stacking helpers; layer 2 consumes layer 1's hidden output.
AnnModel stack_layers(const LSTMWeights& layer1, const LSTMWeights& layer2, ClassifierHead head,
                      const HardActConfig& act);
SnnModel stack_layers(const SpikingLSTMCell& layer1, const SpikingLSTMCell& layer2,
                      ClassifierHead head, int time_steps, Encoding encoding);

}  // namespace slstm
