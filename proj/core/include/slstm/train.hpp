#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "slstm/data.hpp"
#include "slstm/errors.hpp"
#include "slstm/lstm.hpp"
#include "slstm/model.hpp"
#include "slstm/optimizer.hpp"
#include "slstm/params.hpp"

namespace slstm {

/// A mini-batch: sequences [N x F] of equal shape, labels, and each sample's
/// index in its dataset (drives per-sample Poisson seeds).
struct Batch {
  std::vector<Eigen::MatrixXd> sequences;
  std::vector<int> labels;
  std::vector<std::uint64_t> indices;

  std::size_t size() const { return labels.size(); }
  static Batch from(const SequenceSet& set, const std::vector<std::size_t>& rows);
};

template <typename Model>
struct GradResult {
  double loss = 0;        // mean cross-entropy over the batch
  std::int64_t correct = 0;
  Model grads;            // same layout as the model
  SpikeStats stats;       // SNN only
};

/// Exact reverse-mode gradients of the hard-activation LSTM.
GradResult<AnnModel> ann_backward(const AnnModel& model, const Batch& batch);

struct SnnGradOptions {
  int time_steps = 2;
  Encoding encoding = Encoding::direct;
  std::uint64_t seed = 0;
  SpikeMode mode = SpikeMode::heaviside;
  bool detach_reset = false;
};

/// Surrogate-gradient BPTT over (element, step). Gradients for every LIF
/// parameter are always produced; masking happens in the optimizer.
GradResult<SnnModel> snn_backward(const SnnModel& model, const Batch& batch, const SnnGradOptions& options);

/// Per-sample input streams for a batch: direct frames or Poisson trains seeded
/// with mix_seed(seed, sample index).
InputStream make_stream(const Batch& batch, int time_steps, Encoding encoding, std::uint64_t seed);

enum class LrSchedule : std::uint8_t { constant, cosine };

struct TrainConfig {
  int epochs = 10;
  std::size_t batch_size = 32;
  std::size_t micro_batch = 16;  // reduction unit; results do not depend on `workers`
  int workers = 1;
  OptimizerConfig optimizer;
  LrSchedule schedule = LrSchedule::constant;
  double clip_norm = 5.0;
  TrainMask mask;
  bool scalar_lif = false;
  bool detach_reset = false;
  std::uint64_t seed = 0;
  std::string checkpoint_path;  // best-validation checkpoint, empty to skip
  std::string metrics_path;     // CSV, empty to skip
  bool verbose = false;

  void validate() const;
};

struct MetricsRow {
  int epoch = 0;
  std::string split;
  double loss = 0;
  double accuracy = 0;
  double spike_rate = 0;
  double wall_time = 0;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

struct EvalResult {
  double loss = 0;
  double accuracy = 0;
  SpikeStats stats;
  std::int64_t samples = 0;
};

EvalResult evaluate(const AnnModel& model, const SequenceSet& set, int workers = 1);
/// Poisson seeds are mix_seed(seed, sample index).
EvalResult evaluate(const SnnModel& model, const SequenceSet& set, std::uint64_t seed, int workers = 1);

template <typename Model>
struct FitResult {
  Model model;  // parameters at the best validation accuracy
  std::vector<MetricsRow> history;
  int best_epoch = 0;
  double best_accuracy = 0;
};

/// Training loop. The validation set may be empty, then training accuracy
/// selects the best epoch. A non-finite loss stops training, writes the last
/// good checkpoint and throws TrainingDiverged.
FitResult<AnnModel> fit(const AnnModel& model, const SequenceSet& train, const SequenceSet& validation,
                        const TrainConfig& config);
FitResult<SnnModel> fit(const SnnModel& model, const SequenceSet& train, const SequenceSet& validation,
                        const TrainConfig& config);

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace slstm
