#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "slstm/oracles/oracles.hpp"
#include "slstm/params.hpp"
#include "slstm/train.hpp"

namespace slstm::oracles {

namespace {

constexpr double kStep = 1e-5;
constexpr double kKinkMargin = 1e-3;
constexpr double kAnnTol = 1e-5;
constexpr double kSnnTol = 1e-4;

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4}); }

struct Comparison {
  double worst = 0;
  std::string worst_name;
  std::int64_t entries = 0;
  std::int64_t nonzero = 0;
};

/// Central differences of `loss` over every parameter entry of `model`,
/// compared with the entries of `analytic` in the same order.
template <typename Model, typename LossFn>
Comparison compare(const Model& model, Model analytic, LossFn loss) {
  Model probe = model;
  auto params = collect_params(probe);
  auto grads = collect_params(analytic);
  Comparison c;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Eigen::Index i = 0; i < params[p].size; ++i) {
      double& x = params[p].data[i];
      const double x0 = x;
      x = x0 + kStep;
      const double up = loss(probe);
      x = x0 - kStep;
      const double down = loss(probe);
      x = x0;
      const double fd = (up - down) / (2 * kStep);
      const double an = grads[p].data[i];
      ++c.entries;
      if (an != 0) ++c.nonzero;
      const double e = rel_err(an, fd);
      if (e > c.worst) {
        c.worst = e;
        c.worst_name = params[p].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return c;
}

Batch make_batch(const std::vector<Eigen::MatrixXd>& seqs, const std::vector<int>& labels) {
  Batch b;
  b.sequences = seqs;
  b.labels = labels;
  for (std::size_t i = 0; i < seqs.size(); ++i) b.indices.push_back(i);
  return b;
}

std::vector<int> random_labels(std::mt19937_64& rng, std::size_t n, Eigen::Index classes) {
  std::vector<int> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(classes)));
  return out;
}

Check to_check(const std::string& name, const Comparison& c, double loss_err, double tol) {
  std::ostringstream d;
  d << c.entries << " entries (" << c.nonzero << " nonzero), max rel err " << c.worst;
  if (!c.worst_name.empty()) d << " at " << c.worst_name;
  d << ", forward loss diff " << loss_err;
  return {name, c.worst < tol && c.nonzero > 0 && loss_err < 1e-10, d.str()};
}

}  // namespace

SuiteResult gradient_suite(int models_per_kind, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult r;
  r.name = "gradients";
  std::mt19937_64 rng(seed);
  const TinyShape shapes[] = {
      {2, 3, 1, {3}},
      {3, 2, 2, {4, 3}},
      {2, 2, 1, {2}},
      {1, 3, 2, {3}},
  };
  constexpr std::size_t kBatch = 2;
  constexpr Eigen::Index kElements = 3;

  for (int m = 0; m < models_per_kind; ++m) {
    const TinyShape& s = shapes[m % 4];
    AnnModel model;
    std::vector<Eigen::MatrixXd> seqs;
    std::vector<int> labels;
    ReferenceResult ref;
    for (int attempt = 0; attempt < 500; ++attempt) {
      model = random_ann(rng, s);
      seqs = random_sequences(rng, kBatch, kElements, s.input);
      labels = random_labels(rng, kBatch, model.classes());
      ref = reference_ann_loss(model, seqs, labels);
      if (ref.min_kink_distance >= kKinkMargin) break;
    }
    const auto g = ann_backward(model, make_batch(seqs, labels));
    const Comparison c = compare(model, g.grads, [&](const AnnModel& p) { return reference_ann_loss(p, seqs, labels).loss; });
    r.checks.push_back(to_check("ann_model_" + std::to_string(m), c, std::abs(g.loss - ref.loss), kAnnTol));
  }

  for (int m = 0; m < models_per_kind; ++m) {
    const TinyShape& s = shapes[m % 4];
    const Gate analog = m % 2 == 0 ? Gate::i : Gate::g;
    const Encoding enc = (m / 2) % 2 == 0 ? Encoding::direct : Encoding::poisson;
    const int T = 2 + m % 2;
    const std::uint64_t data_seed = mix_seed(seed, 100 + static_cast<std::uint64_t>(m));
    SnnModel model;
    std::vector<Eigen::MatrixXd> seqs;
    std::vector<int> labels;
    ReferenceResult ref;
    for (int attempt = 0; attempt < 500; ++attempt) {
      model = random_snn(rng, s, analog, T, enc);
      seqs = random_sequences(rng, kBatch, kElements, s.input);
      labels = random_labels(rng, kBatch, model.classes());
      ref = reference_snn_relaxed_loss(model, model, seqs, labels, data_seed);
      if (ref.min_kink_distance >= kKinkMargin) break;
    }
    SnnGradOptions opt;
    opt.time_steps = T;
    opt.encoding = enc;
    opt.seed = data_seed;
    opt.mode = SpikeMode::relaxed;
    const auto g = snn_backward(model, make_batch(seqs, labels), opt);
    const Comparison c = compare(model, g.grads, [&](const SnnModel& p) {
      return reference_snn_relaxed_loss(p, model, seqs, labels, data_seed).loss;
    });
    std::string name = "snn_model_" + std::to_string(m) + "_analog_" + std::string(to_string(analog)) + "_" +
                       std::string(to_string(enc));
    r.checks.push_back(to_check(name, c, std::abs(g.loss - ref.loss), kSnnTol));
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace slstm::oracles
