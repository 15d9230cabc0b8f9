#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

#include "slstm/neuron.hpp"

namespace slstm {

enum class Encoding : std::uint8_t { direct = 0, poisson = 1 };

std::string_view to_string(Encoding e);
Encoding parse_encoding(std::string_view s);

/// SplitMix64 finaliser; used to derive independent per-sample seeds.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Analog value replicated at every step: [T x F].
Eigen::MatrixXd encode_direct(const Eigen::VectorXd& x, int time_steps);

/// Bernoulli(x) spikes per step and unit: [T x F]. Entries must lie in [0, 1].
SpikeTrain encode_poisson(const Eigen::VectorXd& x, int time_steps, std::uint64_t seed);

/// Per-element Poisson encoding of a whole sequence [N x F]; row n*T + t of the
/// result is element n at step t.
SpikeTrain encode_sequence_poisson(const Eigen::MatrixXd& sequence, int time_steps,
                                   std::uint64_t seed);

}  // namespace slstm
