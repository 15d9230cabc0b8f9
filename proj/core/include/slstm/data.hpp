#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace slstm {

/// Labelled sequences of equal shape [elements x features], stored as float.
struct SequenceSet {
  Eigen::Index elements = 0;
  Eigen::Index features = 0;
  int classes = 0;
  std::vector<float> values;  // sample-major, then element, then feature
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  Eigen::MatrixXd sample(std::size_t i) const;
  void append(const Eigen::MatrixXd& sequence, int label);
  SequenceSet subset(const std::vector<std::size_t>& indices) const;
  void validate() const;
};

/// Grayscale images as stored in IDX files.
struct ImageSet {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  /// Pixels scaled to [0, 1].
  Eigen::MatrixXd image(std::size_t i) const;
};

ImageSet load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// One image row per sequence element. pad_to 32 zero-pads a 28x28 image by 2
/// on every side; pad_to 28 keeps the native shape.
Eigen::MatrixXd to_row_sequence(const Eigen::MatrixXd& image, int pad_to);
SequenceSet to_sequences(const ImageSet& images, int pad_to);

// SEQF (little-endian): "SEQF", u32 count, u32 N, u32 F, u32 label width
// (1, 2 or 4 bytes), count*N*F float32 values, count unsigned labels.
SequenceSet load_feature_tensor(const std::string& path);
void save_feature_tensor(const std::string& path, const SequenceSet& set, int label_width = 1);

enum class SyntheticKind : std::uint8_t { planted_pattern, delayed_recall };
std::string_view to_string(SyntheticKind k);
SyntheticKind parse_synthetic(std::string_view s);

struct SyntheticShape {
  Eigen::Index elements = 16;
  Eigen::Index features = 8;
  int classes = 4;
};

/// planted_pattern: class k embeds fixed motif k (3 elements long) at a random
/// offset in [0,1] noise. delayed_recall: element 0 one-hot encodes the label in
/// the first `classes` features, the rest is noise, the last element carries a
/// query flag in the final feature. Labels cycle 0..K-1 before shuffling, so
/// classes are balanced within one sample.
SequenceSet synthetic_task(SyntheticKind kind, std::size_t size, std::uint64_t seed,
                           const SyntheticShape& shape = {});

/// Seed-determined permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

struct DataSplit {
  SequenceSet train;
  SequenceSet validation;
};

/// Disjoint split of a shuffled copy; `validation_fraction` of the samples go to validation.
DataSplit split(const SequenceSet& set, double validation_fraction, std::uint64_t seed);

/// The first `count` samples of a seed-determined shuffle (all when count >= size).
SequenceSet take(const SequenceSet& set, std::size_t count, std::uint64_t seed);

}  // namespace slstm
