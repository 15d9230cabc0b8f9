#pragma once

// Batched forward/backward passes shared by the lstm and train modules.

#include <vector>

#include <Eigen/Dense>

#include "slstm/lstm.hpp"
#include "slstm/model.hpp"

namespace slstm::detail {

struct HeadTape {
  std::vector<Eigen::MatrixXd> inputs;  // input of each dense layer
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each dense layer
};

Eigen::MatrixXd head_forward(const ClassifierHead& head, const Eigen::MatrixXd& in, HeadTape* tape);
/// Accumulates into `grad`; returns d(input).
Eigen::MatrixXd head_backward(const ClassifierHead& head, const HeadTape& tape,
                              const Eigen::MatrixXd& dlogits, ClassifierHead& grad);

/// Mean softmax cross-entropy over batch columns; fills d(loss)/d(logits).
double softmax_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                             Eigen::MatrixXd* dlogits);

// ---------------------------------------------------------------------------

struct AnnStepTape {
  Eigen::MatrixXd pre_act;
  std::array<Eigen::MatrixXd, kGateCount> gate;
  Eigen::MatrixXd c_prev, h_prev, c, tc;
};

void ann_step(const LSTMWeights& w, const HardActConfig& act, const Eigen::MatrixXd& x,
              const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& c_prev, Eigen::MatrixXd& h,
              Eigen::MatrixXd& c, AnnStepTape* tape);

struct AnnTape {
  std::vector<std::vector<AnnStepTape>> layers;  // [layer][element]
  std::vector<std::vector<Eigen::MatrixXd>> h;   // [layer][element]
  HeadTape head;
};

/// stream.at(n, 0) is element n; the ANN ignores the step index.
Eigen::MatrixXd ann_forward_batch(const AnnModel& model, const InputStream& stream, AnnTape* tape);
void ann_backward_batch(const AnnModel& model, const InputStream& stream, const AnnTape& tape,
                        const Eigen::MatrixXd& dlogits, AnnModel& grad);

// ---------------------------------------------------------------------------

struct SnnTape {
  std::vector<std::vector<CellStepRecord>> layers;  // [layer][element * T + step]
  std::vector<std::vector<Eigen::MatrixXd>> h;      // [layer][element * T + step]
  HeadTape head;
};

struct SnnBatchOutput {
  Eigen::MatrixXd logits;
  Eigen::MatrixXd readout;
  SpikeStats stats;
};

SnnBatchOutput snn_forward_batch(const SnnModel& model, const InputStream& stream, int time_steps,
                                 SpikeMode mode, SnnTape* tape);
void snn_backward_batch(const SnnModel& model, const InputStream& stream, int time_steps,
                        const SnnTape& tape, const Eigen::MatrixXd& dlogits, bool detach_reset,
                        SnnModel& grad);

/// Gradient-shaped zero copies (same layout as the model).
AnnModel zeros_like(const AnnModel& model);
SnnModel zeros_like(const SnnModel& model);

}  // namespace slstm::detail
