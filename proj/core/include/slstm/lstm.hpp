#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "slstm/energy.hpp"
#include "slstm/model.hpp"

namespace slstm {

// ---------------------------------------------------------------------------
// Non-spiking cell.

struct AnnCellOutput {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

AnnCellOutput ann_cell_step(const LSTMWeights& weights, const Eigen::VectorXd& h_prev,
                            const Eigen::VectorXd& c_prev, const Eigen::VectorXd& x,
                            const HardActConfig& cfg);

/// sequence: [N x F]. h and c start at zero; logits = head(h_N).
Eigen::VectorXd ann_forward(const AnnModel& model, const Eigen::MatrixXd& sequence);

// ---------------------------------------------------------------------------
// Spiking cell. All matrices are [units x batch].

/// Membrane potentials of every spiking unit of one cell for one sequence element.
struct CellStepState {
  std::array<Eigen::MatrixXd, kUnitCount> membrane;

  /// Fresh state at an element boundary: every membrane at its mem_init.
  static CellStepState initial(const SpikingLSTMCell& cell, Eigen::Index batch);
};

/// Everything the backward pass needs from one cell step.
struct CellStepRecord {
  Eigen::MatrixXd pre_act;                      // [4H x B], before step biases
  std::array<FireRecord, kUnitCount> fire;      // spiking units only
  std::array<Eigen::MatrixXd, kGateCount> gate; // f, i, g, o values as used
  Eigen::MatrixXd s_c;                          // c_tanh output
  Eigen::MatrixXd h_in;
  Eigen::MatrixXd c_in;
  Eigen::MatrixXd c_out;
};

struct CellStepOutput {
  Eigen::MatrixXd h;  // ternary
  Eigen::MatrixXd c;
};

struct CellStepOptions {
  SpikeMode mode = SpikeMode::heaviside;
  bool input_is_spike = true;         // false only for layer 1 under direct encoding
  CellStepRecord* record = nullptr;
  LayerSpikeStats* stats = nullptr;
};

/// One internal time step of a spiking LSTM cell.
///
/// Gate pre-activations are wx*x_in + wh*h_in + b. f, o, the spiking one of
/// {i, g} and c_tanh fire through their LIF neurons; the analog gate applies its
/// hard activation. c_out = f*c_in + i*g, the c_tanh neuron integrates c_out and
/// h_out = o * s_c. Under the Heaviside forward a multi-bit operand where a spike
/// is required raises MultiplierAuditError.
CellStepOutput snn_cell_step(const SpikingLSTMCell& cell, CellStepState& state,
                             const Eigen::MatrixXd& x_in, const Eigen::MatrixXd& h_in,
                             const Eigen::MatrixXd& c_in, const CellStepOptions& options = {});

struct SnnRunOptions {
  int time_steps = 2;
  Encoding encoding = Encoding::direct;
  std::uint64_t seed = 0;
};

struct SnnForwardResult {
  Eigen::VectorXd logits;
  SpikeStats stats;
  OpCountReport ops;
};

/// Streams one sequence [N x F] element by element, T steps each; membranes
/// reset to mem_init at each element, the readout is the time-averaged hidden
/// spikes of the final element of the last layer.
SnnForwardResult snn_forward(const SnnModel& model, const Eigen::MatrixXd& sequence,
                             const SnnRunOptions& options);

/// Layer-1 input: element n at step t as an [F x batch] frame. Analog streams
/// hold one frame per element, reused at every step.
class InputStream {
 public:
  /// One sequence [N x F], encoded per `options` (Poisson uses options.seed).
  InputStream(const Eigen::MatrixXd& sequence, const SnnRunOptions& options);
  InputStream(std::vector<Eigen::MatrixXd> frames, Eigen::Index elements, int time_steps,
              bool spiking);

  const Eigen::MatrixXd& at(Eigen::Index element, int step) const;
  bool spiking() const { return spiking_; }
  Eigen::Index elements() const { return elements_; }
  int time_steps() const { return time_steps_; }
  Eigen::Index batch() const { return frames_.front().cols(); }
  Eigen::Index features() const { return frames_.front().rows(); }

 private:
  bool spiking_;
  int time_steps_;
  Eigen::Index elements_;
  std::vector<Eigen::MatrixXd> frames_;
};

}  // namespace slstm
