#include "slstm/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "slstm/encode.hpp"
#include "slstm/errors.hpp"

namespace slstm {

Eigen::MatrixXd SequenceSet::sample(std::size_t i) const {
  if (i >= size()) throw ValidationError("sample index out of range");
  Eigen::MatrixXd m(elements, features);
  const float* p = values.data() + i * static_cast<std::size_t>(elements * features);
  for (Eigen::Index n = 0; n < elements; ++n)
    for (Eigen::Index f = 0; f < features; ++f) m(n, f) = static_cast<double>(*p++);
  return m;
}

void SequenceSet::append(const Eigen::MatrixXd& sequence, int label) {
  if (empty() && elements == 0) {
    elements = sequence.rows();
    features = sequence.cols();
  }
  if (sequence.rows() != elements || sequence.cols() != features)
    throw ValidationError("sequence shape disagrees with the set");
  if (label < 0) throw ValidationError("negative label");
  for (Eigen::Index n = 0; n < elements; ++n)
    for (Eigen::Index f = 0; f < features; ++f) values.push_back(static_cast<float>(sequence(n, f)));
  labels.push_back(label);
  classes = std::max(classes, label + 1);
}

SequenceSet SequenceSet::subset(const std::vector<std::size_t>& indices) const {
  SequenceSet out;
  out.elements = elements;
  out.features = features;
  out.classes = classes;
  const auto stride = static_cast<std::size_t>(elements * features);
  out.values.reserve(indices.size() * stride);
  for (std::size_t i : indices) {
    if (i >= size()) throw ValidationError("subset index out of range");
    out.values.insert(out.values.end(), values.begin() + static_cast<std::ptrdiff_t>(i * stride),
                      values.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride));
    out.labels.push_back(labels[i]);
  }
  return out;
}

void SequenceSet::validate() const {
  if (values.size() != size() * static_cast<std::size_t>(elements * features))
    throw ValidationError("sequence set payload size disagrees with its shape");
  for (int y : labels)
    if (y < 0 || y >= classes) throw ValidationError("label outside 0..classes-1");
}

Eigen::MatrixXd ImageSet::image(std::size_t i) const {
  Eigen::MatrixXd m(rows, cols);
  const std::uint8_t* p = pixels.data() + i * static_cast<std::size_t>(rows * cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = *p++ / 255.0;
  return m;
}

namespace {

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<char>& b, std::size_t off) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(b[off])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 3]));
}

}  // namespace

ImageSet load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  if (img.size() < 16) throw FormatError(images_path + ": truncated IDX header");
  if (be32(img, 0) != 0x00000803)
    throw FormatError(images_path + ": bad magic (expected 0x00000803 for an image file)");
  if (lab.size() < 8) throw FormatError(labels_path + ": truncated IDX header");
  if (be32(lab, 0) != 0x00000801)
    throw FormatError(labels_path + ": bad magic (expected 0x00000801 for a label file)");
  const std::size_t count = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  const std::size_t lcount = be32(lab, 4);
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096)
    throw FormatError(images_path + ": implausible image size");
  if (img.size() != 16 + count * rows * cols)
    throw FormatError(images_path + ": payload is " + std::to_string(img.size() - 16) + " bytes, header promises " +
                      std::to_string(count * rows * cols));
  if (lab.size() != 8 + lcount) throw FormatError(labels_path + ": payload size disagrees with header");
  if (count != lcount)
    throw FormatError("image count " + std::to_string(count) + " != label count " + std::to_string(lcount));
  ImageSet s;
  s.rows = static_cast<Eigen::Index>(rows);
  s.cols = static_cast<Eigen::Index>(cols);
  s.pixels.assign(img.begin() + 16, img.end());
  s.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int y = static_cast<unsigned char>(lab[8 + i]);
    if (y > 9) throw FormatError(labels_path + ": label " + std::to_string(y) + " at index " + std::to_string(i));
    s.labels.push_back(y);
  }
  return s;
}

Eigen::MatrixXd to_row_sequence(const Eigen::MatrixXd& image, int pad_to) {
  if (image.rows() != image.cols()) throw ValidationError("row sequencing needs a square image");
  if (pad_to < image.rows()) throw ValidationError("pad_to smaller than the image");
  if ((pad_to - image.rows()) % 2 != 0) throw ValidationError("padding must be symmetric");
  const Eigen::Index off = (pad_to - image.rows()) / 2;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(pad_to, pad_to);
  out.block(off, off, image.rows(), image.cols()) = image;
  return out;
}

SequenceSet to_sequences(const ImageSet& images, int pad_to) {
  SequenceSet s;
  s.elements = pad_to;
  s.features = pad_to;
  s.values.reserve(images.size() * static_cast<std::size_t>(pad_to * pad_to));
  for (std::size_t i = 0; i < images.size(); ++i) s.append(to_row_sequence(images.image(i), pad_to), images.labels[i]);
  s.classes = 10;
  return s;
}

namespace {

constexpr char kSeqMagic[4] = {'S', 'E', 'Q', 'F'};

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(const std::vector<char>& buf, std::size_t off) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, buf.data() + off, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

SequenceSet load_feature_tensor(const std::string& path) {
  const auto buf = read_file(path);
  if (buf.size() < 20) throw FormatError(path + ": truncated SEQF header");
  if (std::memcmp(buf.data(), kSeqMagic, 4) != 0) throw FormatError(path + ": bad magic (expected SEQF)");
  const std::uint64_t count = get_le<std::uint32_t>(buf, 4);
  const std::uint64_t n = get_le<std::uint32_t>(buf, 8);
  const std::uint64_t f = get_le<std::uint32_t>(buf, 12);
  const std::uint32_t width = get_le<std::uint32_t>(buf, 16);
  if (n == 0 || f == 0) throw FormatError(path + ": zero sequence length or feature width");
  if (width != 1 && width != 2 && width != 4)
    throw FormatError(path + ": label width " + std::to_string(width) + " (expected 1, 2 or 4)");
  const std::uint64_t expected = 20 + count * n * f * 4 + count * width;
  if (buf.size() != expected)
    throw FormatError(path + ": file is " + std::to_string(buf.size()) + " bytes, header implies " +
                      std::to_string(expected));
  SequenceSet s;
  s.elements = static_cast<Eigen::Index>(n);
  s.features = static_cast<Eigen::Index>(f);
  s.values.resize(count * n * f);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    s.values[i] = get_le<float>(buf, 20 + 4 * i);
    if (!std::isfinite(s.values[i])) throw FormatError(path + ": non-finite value at index " + std::to_string(i));
  }
  const std::size_t lab = 20 + count * n * f * 4;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t y = 0;
    if (width == 1) y = static_cast<unsigned char>(buf[lab + i]);
    else if (width == 2) y = get_le<std::uint16_t>(buf, lab + 2 * i);
    else y = get_le<std::uint32_t>(buf, lab + 4 * i);
    if (y > (1U << 20)) throw FormatError(path + ": implausible label at index " + std::to_string(i));
    s.labels.push_back(static_cast<int>(y));
    s.classes = std::max(s.classes, static_cast<int>(y) + 1);
  }
  return s;
}

void save_feature_tensor(const std::string& path, const SequenceSet& set, int label_width) {
  set.validate();
  if (label_width != 1 && label_width != 2 && label_width != 4)
    throw ValidationError("label width must be 1, 2 or 4");
  const std::int64_t max_label = (std::int64_t{1} << (8 * label_width)) - 1;
  std::filesystem::path tmp(path);
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(kSeqMagic, 4);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.elements));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.features));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(label_width));
    for (float v : set.values) put_le<float>(out, v);
    for (int y : set.labels) {
      if (y > max_label) throw ValidationError("label does not fit the chosen label width");
      if (label_width == 1) put_le<std::uint8_t>(out, static_cast<std::uint8_t>(y));
      else if (label_width == 2) put_le<std::uint16_t>(out, static_cast<std::uint16_t>(y));
      else put_le<std::uint32_t>(out, static_cast<std::uint32_t>(y));
    }
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string_view to_string(SyntheticKind k) {
  return k == SyntheticKind::planted_pattern ? "planted-pattern" : "delayed-recall";
}

SyntheticKind parse_synthetic(std::string_view s) {
  if (s == "planted-pattern") return SyntheticKind::planted_pattern;
  if (s == "delayed-recall") return SyntheticKind::delayed_recall;
  throw ValidationError("unknown synthetic task '" + std::string(s) + "' (expected planted-pattern|delayed-recall)");
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, 0x5eed));
  // Fisher-Yates with the portable uniform01 draw.
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
  }
  return idx;
}

SequenceSet synthetic_task(SyntheticKind kind, std::size_t size, std::uint64_t seed,
                           const SyntheticShape& shape) {
  const Eigen::Index n = shape.elements, f = shape.features;
  const int k = shape.classes;
  if (k < 2) throw ValidationError("synthetic task needs at least two classes");
  if (size < static_cast<std::size_t>(k)) throw ValidationError("synthetic task needs at least one sample per class");
  if (kind == SyntheticKind::planted_pattern && n < 3) throw ValidationError("planted pattern needs >= 3 elements");
  if (kind == SyntheticKind::delayed_recall && (n < 2 || f < k + 1))
    throw ValidationError("delayed recall needs >= 2 elements and > classes features");

  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(kind)));
  constexpr Eigen::Index kMotif = 3;
  std::vector<Eigen::MatrixXd> motifs;
  for (int c = 0; c < k; ++c) {
    Eigen::MatrixXd m(kMotif, f);
    for (Eigen::Index i = 0; i < kMotif; ++i)
      for (Eigen::Index j = 0; j < f; ++j) m(i, j) = uniform01(rng) < 0.5 ? 1.0 : 0.0;
    motifs.push_back(std::move(m));
  }
  SequenceSet s;
  s.elements = n;
  s.features = f;
  s.classes = k;
  std::vector<std::pair<Eigen::MatrixXd, int>> rows;
  for (std::size_t i = 0; i < size; ++i) {
    const int y = static_cast<int>(i % static_cast<std::size_t>(k));
    Eigen::MatrixXd seq(n, f);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < f; ++b) seq(a, b) = 0.3 * uniform01(rng);
    if (kind == SyntheticKind::planted_pattern) {
      const auto off = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n - kMotif + 1));
      seq.middleRows(std::min(off, n - kMotif), kMotif) = motifs[static_cast<std::size_t>(y)];
    } else {
      seq.row(0).head(k).setZero();
      seq(0, y) = 1.0;
      seq.row(n - 1).setZero();
      seq(n - 1, f - 1) = 1.0;
    }
    rows.emplace_back(std::move(seq), y);
  }
  for (std::size_t i : permutation(size, seed)) s.append(rows[i].first, rows[i].second);
  s.classes = k;
  return s;
}

DataSplit split(const SequenceSet& set, double validation_fraction, std::uint64_t seed) {
  if (!(validation_fraction >= 0 && validation_fraction < 1))
    throw ValidationError("validation fraction must lie in [0, 1)");
  const auto idx = permutation(set.size(), seed);
  const auto n_val = static_cast<std::size_t>(validation_fraction * static_cast<double>(set.size()));
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  return {set.subset(tr), set.subset(val)};
}

SequenceSet take(const SequenceSet& set, std::size_t count, std::uint64_t seed) {
  if (count >= set.size()) return set;
  auto idx = permutation(set.size(), seed);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return set.subset(idx);
}

}  // namespace slstm
