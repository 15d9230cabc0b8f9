#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "slstm/encode.hpp"
#include "slstm/errors.hpp"
#include "slstm/neuron.hpp"
#include "slstm/oracles/oracles.hpp"

using namespace slstm;

namespace {

std::vector<int> run_sigmoid(double pre, double beta, double th, double init, int steps, double leak = 1.0) {
  LIFGateParams p = LIFGateParams::sigmoid(1, th, beta, init, leak);
  NeuronState st = NeuronState::from(p);
  std::vector<int> out;
  for (int t = 0; t < steps; ++t) out.push_back(step_sigmoid_neuron(st, Eigen::VectorXd::Constant(1, pre), p)[0]);
  return out;
}

}  // namespace

TEST(HardActivations, SigmoidExamples) {
  const HardActConfig a{4.0, 1.0, -1.0};
  EXPECT_DOUBLE_EQ(hard_sigmoid(0, a), 0.5);
  EXPECT_DOUBLE_EQ(hard_sigmoid(2, a), 1.0);
  EXPECT_DOUBLE_EQ(hard_sigmoid(-1, a), 0.25);
  EXPECT_DOUBLE_EQ(hard_sigmoid(-9, a), 0.0);
}

TEST(HardActivations, TanhExamples) {
  EXPECT_DOUBLE_EQ(hard_tanh(0, HardActConfig{}), 0.0);
  EXPECT_DOUBLE_EQ(hard_tanh(1.5, HardActConfig{4, 3, -1}), 0.5);
  EXPECT_DOUBLE_EQ(hard_tanh(-1, HardActConfig{4, 1, -2}), -0.5);
  EXPECT_DOUBLE_EQ(hard_tanh(-5, HardActConfig{4, 1, -2}), -1.0);
}

TEST(HardActivations, SigmoidMonotoneAndSymmetric) {
  const HardActConfig a{3.0, 1.0, -1.0};
  double prev = -1;
  for (double z = -4; z <= 4; z += 0.01) {
    const double y = hard_sigmoid(z, a);
    EXPECT_GE(y, prev);
    EXPECT_NEAR(y + hard_sigmoid(-z, a), 1.0, 1e-12);
    prev = y;
  }
}

TEST(HardActivations, ConfigValidation) {
  EXPECT_THROW((HardActConfig{0, 1, -1}.validate()), ValidationError);
  EXPECT_THROW((HardActConfig{4, 1, 1}.validate()), ValidationError);
}

TEST(SigmoidNeuron, HandTraces) {
  EXPECT_EQ(run_sigmoid(0, 2, 4, 0, 4), (std::vector<int>{0, 0, 1, 0}));
  EXPECT_EQ(run_sigmoid(0, 2, 4, 2, 4), (std::vector<int>{0, 1, 0, 1}));
  EXPECT_EQ(run_sigmoid(-10, 2, 4, 0, 7), std::vector<int>(7, 0));
}

TEST(SigmoidNeuron, StrictThreshold) {
  // Reaching the threshold exactly is not enough.
  EXPECT_EQ(run_sigmoid(1, 0, 2, 0, 2), (std::vector<int>{0, 0}));
  EXPECT_EQ(run_sigmoid(1, 0, 2, 0, 3), (std::vector<int>{0, 0, 1}));
}

TEST(TanhNeuron, HandTraces) {
  LIFGateParams p = LIFGateParams::tanh(1, 3, -2);
  NeuronState st = NeuronState::from(p);
  std::vector<int> s;
  for (int t = 0; t < 3; ++t) s.push_back(step_tanh_neuron(st, Eigen::VectorXd::Constant(1, 2), p)[0]);
  EXPECT_EQ(s, (std::vector<int>{0, 1, 0}));
  EXPECT_DOUBLE_EQ(st.membrane[0], 3.0);

  NeuronState neg = NeuronState::from(p);
  EXPECT_EQ(step_tanh_neuron(neg, Eigen::VectorXd::Constant(1, -3), p)[0], -1);
  EXPECT_DOUBLE_EQ(neg.membrane[0], -1.0);

  NeuronState zero = NeuronState::from(p);
  for (int t = 0; t < 5; ++t) EXPECT_EQ(step_tanh_neuron(zero, Eigen::VectorXd::Zero(1), p)[0], 0);
}

TEST(Neuron, KindMismatchAndDomain) {
  LIFGateParams sig = LIFGateParams::sigmoid(2, 1);
  LIFGateParams tan = LIFGateParams::tanh(2, 1, -1);
  NeuronState st = NeuronState::from(sig);
  EXPECT_THROW(step_tanh_neuron(st, Eigen::VectorXd::Zero(2), sig), ValidationError);
  EXPECT_THROW(step_sigmoid_neuron(st, Eigen::VectorXd::Zero(2), tan), ValidationError);
  EXPECT_THROW(step_sigmoid_neuron(st, Eigen::VectorXd::Zero(3), sig), ValidationError);
  sig.leak[1] = 0;
  EXPECT_THROW(sig.validate(), DomainError);
  tan.threshold_neg[0] = 0.5;
  EXPECT_THROW(tan.validate(), DomainError);
}

TEST(Neuron, NonFiniteMembraneIsReported) {
  LIFGateParams p = LIFGateParams::sigmoid(3, 1);
  NeuronState st = NeuronState::from(p);
  Eigen::VectorXd pre = Eigen::VectorXd::Zero(3);
  pre[2] = std::nan("");
  try {
    step_sigmoid_neuron(st, pre, p);
    FAIL();
  } catch (const NumericFault& e) {
    EXPECT_EQ(e.index(), 2);
  }
}

TEST(ClosedForms, IfAverages) {
  EXPECT_DOUBLE_EQ(if_avg_sigmoid(0, 4, 4, 0), 0.5);
  EXPECT_DOUBLE_EQ(if_avg_sigmoid(0.9, 4, 4, 0.5), 0.75);
  EXPECT_DOUBLE_EQ(if_avg_sigmoid(-3, 4, 4, 0), 0.0);
  EXPECT_DOUBLE_EQ(if_avg_tanh(1.0, 4, HardActConfig{4, 3, -1}, 0, 0), 0.25);
  EXPECT_DOUBLE_EQ(if_avg_tanh(0.0, 4, HardActConfig{}, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(if_avg_tanh(-1.0, 4, HardActConfig{4, 1, -2}, 0, 0), -0.5);
}

TEST(ClosedForms, IfAveragesMatchSimulationOffTies) {
  // z=0, T=4, v=4 sits on a floor tie: the strict threshold gives one spike
  // from a zero membrane; the half-threshold start recovers the closed form.
  EXPECT_EQ(oracles::simulate_sigmoid_count(0.0, 4, 1, 2, 0, 4), 1);
  EXPECT_DOUBLE_EQ(oracles::simulate_sigmoid_count(0.0, 4, 1, 2, 2, 4) / 4.0, if_avg_sigmoid(0, 4, 4, 0));
  EXPECT_DOUBLE_EQ(oracles::simulate_sigmoid_count(0.9, 4, 1, 2, 0, 4) / 4.0, if_avg_sigmoid(0.9, 4, 4, 0));
  EXPECT_DOUBLE_EQ(oracles::simulate_sigmoid_count(0.9, 4, 1, 2, 2, 4) / 4.0, if_avg_sigmoid(0.9, 4, 4, 0.5));
}

TEST(ClosedForms, LifFirstSpike) {
  EXPECT_EQ(lif_first_spike_time(0.3, 1, 0.9), 4);
  EXPECT_EQ(lif_first_spike_time(0.25, 1, 1.0), 4);
  EXPECT_EQ(lif_first_spike_time(0.05, 1, 0.9), std::nullopt);
  EXPECT_EQ(lif_first_spike_time(-1, 1, 1.05), std::nullopt);
  EXPECT_THROW(lif_first_spike_time(1, 1, 0), DomainError);
  EXPECT_THROW(lif_first_spike_time(1, 0, 1), DomainError);
  // Membrane trace 0.3, 0.57, 0.813, 1.0317.
  EXPECT_EQ(run_sigmoid(0.3, 0, 1, 0, 4, 0.9), (std::vector<int>{0, 0, 0, 1}));
}

TEST(ClosedForms, LifAverage) {
  EXPECT_DOUBLE_EQ(lif_avg_sigmoid(0.3, 8, 1, 0.9), 0.25);
  EXPECT_DOUBLE_EQ(lif_avg_sigmoid(0.05, 3, 1, 0.9), 0.0);
  EXPECT_DOUBLE_EQ(lif_avg_sigmoid(0.25, 8, 1, 1.0), 0.25);
}

TEST(ClosedForms, Surrogate) {
  EXPECT_DOUBLE_EQ(surrogate_grad(1, 1, 0.3), 0.3);
  EXPECT_DOUBLE_EQ(surrogate_grad(0, 1, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(surrogate_grad(1.5, 1, 0.3), 0.15);
  EXPECT_THROW(surrogate_grad(1, 0, 0.3), DomainError);
}

TEST(ClosedForms, SurrogateIntegratesToGammaAndIsRampDerivative) {
  for (double th : {0.5, 1.0, 4.0, -2.0}) {
    const double gamma = 0.7;
    double integral = 0;
    const double lo = -3 * std::abs(th), hi = 3 * std::abs(th), du = 1e-4;
    for (double u = lo; u < hi; u += du) integral += surrogate_grad(u + du / 2, th, gamma) * du;
    EXPECT_NEAR(integral, gamma, 1e-6);
    if (th > 0)
      for (double u = -0.3 * th; u < 2.3 * th; u += 0.137 * th) {
        const double fd = (surrogate_ramp(u + 1e-6, th, gamma) - surrogate_ramp(u - 1e-6, th, gamma)) / 2e-6;
        EXPECT_NEAR(fd, surrogate_grad(u, th, gamma), 1e-6);
      }
  }
}

TEST(ClosedForms, OptimalShift) {
  EXPECT_DOUBLE_EQ(optimal_shift(4, 2), 1.0);
  EXPECT_DOUBLE_EQ(optimal_shift(-2, 4), -0.25);
  EXPECT_DOUBLE_EQ(optimal_shift(3, 3000), 0.0005);
}

TEST(ClosedForms, OracleSuiteGatingChecksPass) {
  const auto r = oracles::closed_form_suite();
  for (const auto& c : r.checks)
    if (c.gating) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  EXPECT_LT(r.seconds, 10.0);
}

TEST(ClosedForms, ShiftOptimality) {
  const auto r = oracles::shift_optimality_suite();
  for (const auto& c : r.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}

TEST(Encoding, Direct) {
  const Eigen::MatrixXd m = encode_direct(Eigen::VectorXd::Constant(1, 0.7), 3);
  EXPECT_EQ(m.rows(), 3);
  EXPECT_EQ(m.cols(), 1);
  EXPECT_TRUE((m.array() == 0.7).all());
  EXPECT_TRUE((encode_direct(Eigen::VectorXd::Zero(1), 2).array() == 0).all());
  EXPECT_EQ(encode_direct(Eigen::VectorXd::Zero(5), 4).cols(), 5);
}

TEST(Encoding, PoissonExtremesRateAndDeterminism) {
  EXPECT_EQ(encode_poisson(Eigen::VectorXd::Zero(4), 50, 1).count_nonzero(), 0);
  EXPECT_EQ(encode_poisson(Eigen::VectorXd::Ones(4), 50, 1).count_nonzero(), 200);
  const SpikeTrain s = encode_poisson(Eigen::VectorXd::Constant(1, 0.5), 10000, 42);
  EXPECT_NEAR(s.count_nonzero() / 10000.0, 0.5, 0.02);
  const SpikeTrain a = encode_poisson(Eigen::VectorXd::LinSpaced(6, 0, 1), 64, 9);
  const SpikeTrain b = encode_poisson(Eigen::VectorXd::LinSpaced(6, 0, 1), 64, 9);
  for (int t = 0; t < 64; ++t)
    for (int u = 0; u < 6; ++u) EXPECT_EQ(a.at(t, u), b.at(t, u));
  EXPECT_THROW(encode_poisson(Eigen::VectorXd::Constant(1, 1.5), 4, 0), ValidationError);
  EXPECT_THROW(encode_poisson(Eigen::VectorXd::Constant(1, -0.1), 4, 0), ValidationError);
}

TEST(Encoding, PoissonRateConvergesLikeInverseSqrtT) {
  // Mean |rate - x| over many units shrinks roughly by 2 when T grows by 4.
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(400, 0.3);
  auto err = [&](int T) {
    const SpikeTrain s = encode_poisson(x, T, 5);
    double e = 0;
    for (int u = 0; u < 400; ++u) {
      double c = 0;
      for (int t = 0; t < T; ++t) c += s.at(t, u);
      e += std::abs(c / T - 0.3);
    }
    return e / 400;
  };
  const double r = err(100) / err(1600);
  EXPECT_GT(r, 3.0);
  EXPECT_LT(r, 5.5);
}

TEST(SpikeTrainTest, AlphabetEnforced) {
  SpikeTrain b(SpikeKind::binary, 2, 2);
  EXPECT_THROW(b.set(0, 0, -1), ValidationError);
  SpikeTrain t(SpikeKind::ternary, 2, 2);
  t.set(1, 1, -1);
  EXPECT_EQ(t.row(1)[1], -1.0);
  EXPECT_THROW(t.set(0, 0, 2), ValidationError);
}
