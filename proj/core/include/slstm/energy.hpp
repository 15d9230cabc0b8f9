#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slstm/model.hpp"

namespace slstm {

/// Operation tallies. A MAC is one operation; `leak_multiplies` is the
/// membrane-decay bucket kept apart from datapath multiplies.
struct OpTally {
  std::int64_t multiplies = 0;
  std::int64_t macs = 0;
  std::int64_t accumulates = 0;
  std::int64_t comparisons = 0;
  std::int64_t activations = 0;
  std::int64_t leak_multiplies = 0;

  std::int64_t flops() const {
    return multiplies + macs + accumulates + comparisons + activations + leak_multiplies;
  }
  OpTally& operator+=(const OpTally& o);
  friend OpTally operator+(OpTally a, const OpTally& b) { return a += b; }
  friend bool operator==(const OpTally&, const OpTally&) = default;
};

enum class OpSite : std::uint8_t {
  input_projection,
  recurrent_projection,
  gate_f,
  gate_i,
  gate_g,
  gate_o,
  cell_update,
  c_tanh,
  hidden_combine,
};
inline constexpr int kSiteCount = 9;
std::string_view to_string(OpSite s);

struct LayerOps {
  std::array<OpTally, kSiteCount> site{};

  OpTally& operator[](OpSite s) { return site[static_cast<int>(s)]; }
  const OpTally& operator[](OpSite s) const { return site[static_cast<int>(s)]; }
  OpTally total() const;
};

struct OpCountReport {
  std::vector<LayerOps> layers;
  OpTally head;  // classifier plus readout averaging
  int time_steps = 1;

  OpTally layers_total() const;
  OpTally total() const { return layers_total() + head; }
  std::int64_t flops() const { return total().flops(); }
  OpCountReport& operator+=(const OpCountReport& o);
  nlohmann::json to_json() const;
};

/// Dense MAC accounting of the hard-activation LSTM over `elements` sequence
/// elements of one sequence.
OpCountReport count_ops_ann(const AnnModel& model, Eigen::Index elements);

/// Event-driven accounting of measured spike statistics. `stats` may cover any
/// number of sequences of length `elements` at `time_steps` steps each.
OpCountReport count_ops_snn(const SpikeStats& stats, const SnnModel& model, Eigen::Index elements,
                            int time_steps, Encoding encoding);

/// Event-driven accounting of one spiking layer over whatever steps `stats` covers.
LayerOps count_layer_ops_snn(const LayerSpikeStats& stats, const SpikingLSTMCell& cell,
                             bool analog_input);

/// Serial per-element spiking LSTM with multi-bit hidden state (the baseline
/// pipelining is compared against): T steps per element, recurrent and cell
/// products are MACs/multiplies. One sequence of `elements` elements.
OpCountReport count_ops_priorwork(const SnnModel& model, Eigen::Index elements, int time_steps);

/// Throws MultiplierAuditError unless every spiking-layer site is free of
/// multiplies and MACs, except the layer-1 input projection under direct encoding.
void audit_multipliers(const OpCountReport& report, Encoding encoding);

struct NeuromorphicPlatform {
  std::string name;
  double e_compute;
  double e_static;
};

/// Per-op energies (picojoule scale) and neuromorphic (compute, static) pairs.
struct EnergyModel {
  double e_mac = 4.6;
  double e_mul = 3.7;
  double e_ac = 0.9;
  double e_compare = 0.1;
  double e_act = 0.9;
  std::vector<NeuromorphicPlatform> platforms{{"TrueNorth", 0.4, 0.6}, {"SpiNNaker", 0.64, 0.36}};

  void validate() const;
  static EnergyModel from_json(const nlohmann::json& j);
};

struct EnergyBreakdown {
  double mac = 0, multiply = 0, accumulate = 0, compare = 0, activation = 0, leak = 0;
  double head = 0;  // included in the category sums above
  double digital_total = 0;
  std::vector<std::pair<std::string, double>> neuromorphic;

  nlohmann::json to_json() const;
};

/// FLOPs * e_compute + T * e_static.
double neuromorphic_energy(std::int64_t flops, int time_steps, double e_compute, double e_static);

EnergyBreakdown estimate_energy(const OpCountReport& report, const EnergyModel& em);

void write_energy_csv(std::ostream& out, const std::vector<std::pair<std::string, EnergyBreakdown>>& rows);

/// Histogram of per-neuron firing rates, one CSV row per (layer, unit, bin).
void write_sparsity_csv(std::ostream& out, const SpikeStats& stats, const SnnModel& model,
                        int bins = 10);

}  // namespace slstm
