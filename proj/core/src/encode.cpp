#include "slstm/encode.hpp"

#include <string>

#include "slstm/errors.hpp"

namespace slstm {

std::string_view to_string(Encoding e) { return e == Encoding::direct ? "direct" : "poisson"; }

Encoding parse_encoding(std::string_view s) {
  if (s == "direct") return Encoding::direct;
  if (s == "poisson") return Encoding::poisson;
  throw ValidationError("unknown encoding '" + std::string(s) + "' (expected direct|poisson)");
}

Eigen::MatrixXd encode_direct(const Eigen::VectorXd& x, int time_steps) {
  if (time_steps < 1) throw ValidationError("time steps must be >= 1");
  return x.transpose().replicate(time_steps, 1);
}

namespace {

void check_unit_interval(const Eigen::VectorXd& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!(x[i] >= 0.0 && x[i] <= 1.0))
      throw ValidationError("Poisson encoder input outside [0,1] at index " + std::to_string(i));
}

}  // namespace

SpikeTrain encode_poisson(const Eigen::VectorXd& x, int time_steps, std::uint64_t seed) {
  if (time_steps < 1) throw ValidationError("time steps must be >= 1");
  check_unit_interval(x);
  std::mt19937_64 rng(seed);
  SpikeTrain train(SpikeKind::binary, time_steps, x.size());
  for (int t = 0; t < time_steps; ++t)
    for (Eigen::Index u = 0; u < x.size(); ++u)
      train.set(t, u, uniform01(rng) < x[u] ? 1 : 0);
  return train;
}

SpikeTrain encode_sequence_poisson(const Eigen::MatrixXd& sequence, int time_steps,
                                   std::uint64_t seed) {
  if (time_steps < 1) throw ValidationError("time steps must be >= 1");
  const Eigen::Index n = sequence.rows();
  const Eigen::Index f = sequence.cols();
  std::mt19937_64 rng(seed);
  SpikeTrain train(SpikeKind::binary, n * time_steps, f);
  for (Eigen::Index e = 0; e < n; ++e) {
    const Eigen::VectorXd row = sequence.row(e).transpose();
    check_unit_interval(row);
    for (int t = 0; t < time_steps; ++t)
      for (Eigen::Index u = 0; u < f; ++u)
        train.set(e * time_steps + t, u, uniform01(rng) < row[u] ? 1 : 0);
  }
  return train;
}

}  // namespace slstm
