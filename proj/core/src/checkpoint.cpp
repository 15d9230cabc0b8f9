#include "slstm/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "slstm/errors.hpp"

namespace slstm {

namespace {

constexpr char kMagic[6] = {'S', 'L', 'S', 'T', 'M', '1'};
constexpr std::uint32_t kMaxDim = 1U << 24;

template <typename T>
void put(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T)))
    throw FormatError(std::string("checkpoint truncated while reading ") + what);
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(out, m(i, j));
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(out, v[i]);
}

void get_matrix(std::istream& in, Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = get<double>(in, what);
}

Eigen::VectorXd get_vector(std::istream& in, Eigen::Index n, const char* what) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = get<double>(in, what);
  return v;
}

std::uint32_t dim(Eigen::Index n) { return static_cast<std::uint32_t>(n); }

std::uint32_t get_dim(std::istream& in, const char* what) {
  const auto v = get<std::uint32_t>(in, what);
  if (v == 0 || v > kMaxDim) throw FormatError(std::string("checkpoint has implausible ") + what);
  return v;
}

struct Header {
  ModelKind kind;
  Encoding encoding;
  std::uint32_t time_steps;
  HardActConfig act;
  std::vector<std::array<std::uint32_t, 2>> layers;
  std::vector<std::uint8_t> plans;
  std::vector<std::array<std::uint32_t, 2>> head;
};

void write_header(std::ostream& out, const Header& h) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(h.kind));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(h.encoding));
  put<std::uint32_t>(out, h.time_steps);
  put<double>(out, h.act.v_sig);
  put<double>(out, h.act.v_tanh_pos);
  put<double>(out, h.act.v_tanh_neg);
  put<std::uint32_t>(out, dim(static_cast<Eigen::Index>(h.layers.size())));
  for (std::size_t l = 0; l < h.layers.size(); ++l) {
    put<std::uint32_t>(out, h.layers[l][0]);
    put<std::uint32_t>(out, h.layers[l][1]);
    put<std::uint8_t>(out, h.plans[l]);
  }
  put<std::uint32_t>(out, dim(static_cast<Eigen::Index>(h.head.size())));
  for (const auto& d : h.head) {
    put<std::uint32_t>(out, d[0]);
    put<std::uint32_t>(out, d[1]);
  }
}

Header read_header(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError("not an SLSTM1 checkpoint (bad magic)");
  Header h;
  const auto kind = get<std::uint8_t>(in, "model kind");
  if (kind > 1) throw FormatError("checkpoint has unknown model kind " + std::to_string(kind));
  h.kind = static_cast<ModelKind>(kind);
  const auto enc = get<std::uint8_t>(in, "encoding");
  if (enc > 1) throw FormatError("checkpoint has unknown encoding " + std::to_string(enc));
  h.encoding = static_cast<Encoding>(enc);
  h.time_steps = get<std::uint32_t>(in, "time steps");
  if (h.time_steps == 0) throw FormatError("checkpoint has zero time steps");
  h.act.v_sig = get<double>(in, "v_sig");
  h.act.v_tanh_pos = get<double>(in, "v_tanh_pos");
  h.act.v_tanh_neg = get<double>(in, "v_tanh_neg");
  try {
    h.act.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("checkpoint activation scales invalid: ") + e.what());
  }
  const auto layers = get_dim(in, "layer count");
  if (layers > 64) throw FormatError("checkpoint has implausible layer count");
  for (std::uint32_t l = 0; l < layers; ++l) {
    const auto input = get_dim(in, "layer input size");
    const auto hidden = get_dim(in, "layer hidden size");
    h.layers.push_back({input, hidden});
    h.plans.push_back(get<std::uint8_t>(in, "plan flags"));
  }
  const auto head = get_dim(in, "head layer count");
  if (head > 64) throw FormatError("checkpoint has implausible head layer count");
  for (std::uint32_t l = 0; l < head; ++l) {
    const auto input = get_dim(in, "head input size");
    const auto output = get_dim(in, "head output size");
    h.head.push_back({input, output});
  }
  return h;
}

Header header_of(const std::vector<LSTMWeights>& layers, const ClassifierHead& head) {
  Header h{};
  for (const auto& w : layers) {
    h.layers.push_back({dim(w.input()), dim(w.hidden())});
    h.plans.push_back(0);
  }
  for (const auto& d : head.layers) h.head.push_back({dim(d.w.cols()), dim(d.w.rows())});
  return h;
}

void write_weights(std::ostream& out, const std::vector<const LSTMWeights*>& layers, const ClassifierHead& head) {
  for (const auto* w : layers) {
    put_matrix(out, w->wx);
    put_matrix(out, w->wh);
    put_vector(out, w->b);
  }
  for (const auto& d : head.layers) {
    put_matrix(out, d.w);
    put_vector(out, d.b);
  }
}

void read_weights(std::istream& in, const Header& h, std::vector<LSTMWeights>& layers, ClassifierHead& head) {
  for (const auto& d : h.layers) {
    LSTMWeights w = LSTMWeights::zeros(d[0], d[1]);
    get_matrix(in, w.wx, "wx");
    get_matrix(in, w.wh, "wh");
    w.b = get_vector(in, d[1] * 4, "b");
    layers.push_back(std::move(w));
  }
  for (const auto& d : h.head) {
    DenseLayer layer{Eigen::MatrixXd(d[1], d[0]), Eigen::VectorXd()};
    get_matrix(in, layer.w, "head w");
    layer.b = get_vector(in, d[1], "head b");
    head.layers.push_back(std::move(layer));
  }
}

void finish(std::istream& in) {
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint");
}

template <typename Model>
void save_impl(const std::string& path, const Model& model) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    write_checkpoint(out, model);
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace

void write_checkpoint(std::ostream& out, const AnnModel& model) {
  model.validate();
  Header h = header_of(model.layers, model.head);
  h.kind = ModelKind::ann;
  h.encoding = Encoding::direct;
  h.time_steps = 1;
  h.act = model.act;
  write_header(out, h);
  std::vector<const LSTMWeights*> ws;
  for (const auto& w : model.layers) ws.push_back(&w);
  write_weights(out, ws, model.head);
}

void write_checkpoint(std::ostream& out, const SnnModel& model) {
  model.validate();
  std::vector<LSTMWeights> shapes;
  std::vector<const LSTMWeights*> ws;
  for (const auto& c : model.layers) {
    if (std::memcmp(&c.act, &model.layers.front().act, sizeof(HardActConfig)) != 0)
      throw ValidationError("checkpoint requires one activation config shared by all layers");
    shapes.push_back(LSTMWeights::zeros(c.input(), c.hidden()));
    ws.push_back(&c.weights);
  }
  Header h = header_of(shapes, model.head);
  h.kind = ModelKind::snn;
  h.encoding = model.encoding;
  h.time_steps = static_cast<std::uint32_t>(model.time_steps);
  h.act = model.layers.front().act;
  for (std::size_t l = 0; l < model.layers.size(); ++l) h.plans[l] = model.layers[l].plan.flags();
  write_header(out, h);
  write_weights(out, ws, model.head);
  for (const auto& c : model.layers)
    for (int k = 0; k < kUnitCount; ++k) {
      if (!c.plan.spiking(static_cast<Unit>(k))) continue;
      const auto& p = c.params[k];
      put_vector(out, p.leak);
      put_vector(out, p.threshold_pos);
      if (p.ternary()) put_vector(out, p.threshold_neg);
      put_vector(out, p.step_bias);
      put_vector(out, p.mem_init);
      put<double>(out, p.surrogate_gamma);
    }
}

Checkpoint read_checkpoint(std::istream& in) {
  const Header h = read_header(in);
  std::vector<LSTMWeights> layers;
  ClassifierHead head;
  read_weights(in, h, layers, head);
  Checkpoint ck;
  ck.kind = h.kind;
  try {
    if (h.kind == ModelKind::ann) {
      finish(in);
      AnnModel m{h.act, std::move(layers), std::move(head)};
      m.validate();
      ck.ann = std::move(m);
      return ck;
    }
    SnnModel m;
    m.time_steps = static_cast<int>(h.time_steps);
    m.encoding = h.encoding;
    m.head = std::move(head);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      SpikingLSTMCell c{std::move(layers[l]), {}, ConversionPlan::from_flags(h.plans[l]), h.act};
      c.plan.validate();
      const Eigen::Index n = c.hidden();
      for (int k = 0; k < kUnitCount; ++k) {
        const Unit u = static_cast<Unit>(k);
        if (!c.plan.spiking(u)) continue;
        LIFGateParams p;
        p.leak = get_vector(in, n, "leak");
        p.threshold_pos = get_vector(in, n, "threshold_pos");
        if (is_tanh_unit(u)) p.threshold_neg = get_vector(in, n, "threshold_neg");
        p.step_bias = get_vector(in, n, "step_bias");
        p.mem_init = get_vector(in, n, "mem_init");
        p.surrogate_gamma = get<double>(in, "surrogate gamma");
        c.params[k] = std::move(p);
      }
      m.layers.push_back(std::move(c));
    }
    finish(in);
    m.validate();
    ck.snn = std::move(m);
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint content invalid: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const std::string& path, const AnnModel& model) { save_impl(path, model); }
void save_checkpoint(const std::string& path, const SnnModel& model) { save_impl(path, model); }

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  try {
    return read_checkpoint(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

AnnModel load_ann(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  if (!ck.ann) throw ValidationError(path + " holds a spiking model, expected a non-spiking one");
  return std::move(*ck.ann);
}

SnnModel load_snn(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  if (!ck.snn) throw ValidationError(path + " holds a non-spiking model, expected a spiking one");
  return std::move(*ck.snn);
}

}  // namespace slstm
