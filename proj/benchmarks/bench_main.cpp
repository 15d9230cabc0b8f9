#include <benchmark/benchmark.h>

#include <random>

#include "slstm/convert.hpp"
#include "slstm/lstm.hpp"
#include "slstm/train.hpp"

using namespace slstm;

namespace {

AnnModel make_ann(Eigen::Index input, Eigen::Index hidden, int classes) {
  std::mt19937_64 rng(1);
  return {HardActConfig{}, {LSTMWeights::random(input, hidden, rng)}, ClassifierHead::random(hidden, {classes}, rng)};
}

Eigen::MatrixXd make_sequence(Eigen::Index n, Eigen::Index f) {
  std::mt19937_64 rng(2);
  return Eigen::MatrixXd::NullaryExpr(n, f, [&] { return uniform01(rng); });
}

SnnModel make_snn(Eigen::Index input, Eigen::Index hidden, int t) {
  ConvertOptions o;
  o.time_steps = t;
  return convert(make_ann(input, hidden, 10), o);
}

}  // namespace

static void BM_NeuronStep(benchmark::State& state) {
  const auto units = state.range(0);
  const auto p = LIFGateParams::sigmoid(units, 1.0, 0.5, 0.5, 0.9);
  NeuronState s = NeuronState::from(p);
  const Eigen::VectorXd pre = Eigen::VectorXd::LinSpaced(units, -1.0, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(step_sigmoid_neuron(s, pre, p));
  state.SetItemsProcessed(state.iterations() * units);
}
BENCHMARK(BM_NeuronStep)->Arg(128)->Arg(1024);

static void BM_AnnCellStep(benchmark::State& state) {
  const auto h = state.range(0);
  const AnnModel m = make_ann(32, h, 10);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(32, 0.3);
  Eigen::VectorXd hp = Eigen::VectorXd::Zero(h), cp = Eigen::VectorXd::Zero(h);
  for (auto _ : state) benchmark::DoNotOptimize(ann_cell_step(m.layers[0], hp, cp, x, m.act));
}
BENCHMARK(BM_AnnCellStep)->Arg(128);

static void BM_SnnCellStep(benchmark::State& state) {
  const auto h = state.range(0);
  const SnnModel m = make_snn(32, h, 2);
  const auto& cell = m.layers[0];
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(32, 1, 0.3);
  const Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(h, 1), c0 = Eigen::MatrixXd::Zero(h, 1);
  CellStepOptions opt;
  opt.input_is_spike = false;
  for (auto _ : state) {
    CellStepState st = CellStepState::initial(cell, 1);
    benchmark::DoNotOptimize(snn_cell_step(cell, st, x, h0, c0, opt));
  }
}
BENCHMARK(BM_SnnCellStep)->Arg(128);

static void BM_SnnForward(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0));
  const SnnModel m = make_snn(32, 128, t);
  const Eigen::MatrixXd seq = make_sequence(32, 32);
  SnnRunOptions o;
  o.time_steps = t;
  for (auto _ : state) benchmark::DoNotOptimize(snn_forward(m, seq, o));
}
BENCHMARK(BM_SnnForward)->Arg(2)->Arg(8)->Unit(benchmark::kMicrosecond);

static void BM_AnnForward(benchmark::State& state) {
  const AnnModel m = make_ann(32, 128, 10);
  const Eigen::MatrixXd seq = make_sequence(32, 32);
  for (auto _ : state) benchmark::DoNotOptimize(ann_forward(m, seq));
}
BENCHMARK(BM_AnnForward)->Unit(benchmark::kMicrosecond);

static void BM_SnnBackward(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0));
  const SnnModel m = make_snn(32, 128, t);
  Batch b;
  for (int i = 0; i < 8; ++i) {
    b.sequences.push_back(make_sequence(32, 32));
    b.labels.push_back(i % 10);
    b.indices.push_back(static_cast<std::uint64_t>(i));
  }
  SnnGradOptions o;
  o.time_steps = t;
  for (auto _ : state) benchmark::DoNotOptimize(snn_backward(m, b, o));
}
BENCHMARK(BM_SnnBackward)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_AnnBackward(benchmark::State& state) {
  const AnnModel m = make_ann(32, 128, 10);
  Batch b;
  for (int i = 0; i < 8; ++i) {
    b.sequences.push_back(make_sequence(32, 32));
    b.labels.push_back(i % 10);
    b.indices.push_back(static_cast<std::uint64_t>(i));
  }
  for (auto _ : state) benchmark::DoNotOptimize(ann_backward(m, b));
}
BENCHMARK(BM_AnnBackward)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
