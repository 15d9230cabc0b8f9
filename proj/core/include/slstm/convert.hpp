#pragma once

#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "slstm/model.hpp"

namespace slstm {

struct ConvertOptions {
  int time_steps = 2;
  ConversionPlan plan;
  bool shift = true;  // mem_init at half threshold; off leaves membranes at 0
  double surrogate_gamma = 0.3;
  Encoding encoding = Encoding::direct;
};

/// Weights copied verbatim. Sigmoid units: threshold v_sig, step bias v_sig/2,
/// mem_init v_sig/2. Tanh units: thresholds (v_tanh_pos, v_tanh_neg), no step
/// bias, mem_init v_tanh_pos/2. Leaks start at 1.
SnnModel convert(const AnnModel& ann, const ConvertOptions& options);

/// The hard-activation network carrying a spiking model's weights.
AnnModel nonspiking_twin(const SnnModel& snn);

struct GateErrorRow {
  int layer = 0;
  Unit unit = Unit::f;
  double mean_abs_error = 0;
  std::int64_t samples = 0;
};

/// Mean |SNN gate rate - ANN gate value| per layer and unit, over every probe,
/// element and neuron. For c_tanh the ANN side is hard_tanh(c).
struct ConversionErrorReport {
  int time_steps = 0;
  std::vector<GateErrorRow> rows;

  double mean() const;
  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

/// Probes are [N x F] sequences of equal length, run directly encoded.
ConversionErrorReport conversion_error_report(const AnnModel& ann, const SnnModel& snn,
                                              const std::vector<Eigen::MatrixXd>& probes,
                                              int time_steps);

}  // namespace slstm
