#pragma once

// Independent checks of the library against closed forms, brute force and
// scalar reference implementations. Shared by `slstm verify` and the
// acceptance suite.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slstm/model.hpp"

namespace slstm::oracles {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
  /// Non-gating checks are reported but do not fail their suite.
  bool gating = true;
};

struct SuiteResult {
  std::string name;
  std::vector<Check> checks;
  double seconds = 0;

  bool passed() const;
  bool all_passed() const;  // including non-gating checks
  nlohmann::json to_json() const;
};

SuiteResult closed_form_suite();
SuiteResult shift_optimality_suite();
SuiteResult gradient_suite(int models_per_kind = 4, std::uint64_t seed = 7);
SuiteResult pipeline_suite(int cases = 100, std::uint64_t seed = 11);
SuiteResult audit_suite(int cases = 24, std::uint64_t seed = 13);

// ---------------------------------------------------------------------------
// Building blocks, exposed for unit tests.

struct TinyShape {
  Eigen::Index input = 2;
  Eigen::Index hidden = 3;
  int layers = 1;
  std::vector<Eigen::Index> head{3};
};

AnnModel random_ann(std::mt19937_64& rng, const TinyShape& shape);
/// Random weights and LIF parameters (leaks in [0.8, 1.1], thresholds and
/// initial membranes perturbed around their conversion values).
SnnModel random_snn(std::mt19937_64& rng, const TinyShape& shape, Gate analog, int time_steps,
                    Encoding encoding);
std::vector<Eigen::MatrixXd> random_sequences(std::mt19937_64& rng, std::size_t count, Eigen::Index elements,
                                              Eigen::Index features);

struct ReferenceResult {
  double loss = 0;
  double min_kink_distance = 1e300;  // over every piecewise-linear point visited
};

/// Scalar-loop forward of the hard-activation LSTM plus mean cross-entropy.
ReferenceResult reference_ann_loss(const AnnModel& model, const std::vector<Eigen::MatrixXd>& sequences,
                                   const std::vector<int>& labels);

/// Scalar-loop forward of the spiking LSTM with every Heaviside replaced by
/// gamma * ramp((u - th) / |th0|), where th0 comes from `scale` (held fixed
/// while `model` is perturbed). Poisson inputs use encode_sequence_poisson
/// with mix_seed(seed, sample index).
ReferenceResult reference_snn_relaxed_loss(const SnnModel& model, const SnnModel& scale,
                                           const std::vector<Eigen::MatrixXd>& sequences,
                                           const std::vector<int>& labels, std::uint64_t seed);

/// Spike count of a soft-reset IF/LIF run through the library neuron.
int simulate_sigmoid_count(double drive, double v, double leak, double step_bias, double mem_init, int steps);
/// Spike count when the membrane is reset to zero on every spike.
int simulate_reset_to_zero_count(double drive, double v, double leak, int steps);

}  // namespace slstm::oracles
