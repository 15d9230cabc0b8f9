#include "slstm/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "slstm/errors.hpp"

namespace slstm {

namespace {

/// Reads fields of one JSON object, remembering which were consumed so that
/// leftovers can be rejected with their full path.
class Fields {
 public:
  Fields(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ValidationError(where(key) + ": " + msg);
  }
  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const nlohmann::json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  template <typename T>
  void number(const std::string& key, T& dst) {
    const auto* v = find(key);
    if (!v) return;
    if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (v->get<std::int64_t>() < 0) fail(key, "must be nonnegative");
    } else {
      if (!v->is_number()) fail(key, "expected a number");
    }
    dst = v->get<T>();
  }

  void boolean(const std::string& key, bool& dst) {
    const auto* v = find(key);
    if (!v) return;
    if (!v->is_boolean()) fail(key, "expected true or false");
    dst = v->get<bool>();
  }

  void string(const std::string& key, std::string& dst) {
    const auto* v = find(key);
    if (!v) return;
    if (!v->is_string()) fail(key, "expected a string");
    dst = v->get<std::string>();
  }

  template <typename Fn>
  void parsed(const std::string& key, Fn fn) {
    std::string s;
    string(key, s);
    if (s.empty()) return;
    try {
      fn(s);
    } catch (const ValidationError& e) {
      fail(key, e.what());
    }
  }

  void check(const std::string& key, bool ok, const std::string& msg) const {
    if (!ok) fail(key, msg);
  }

  void reject_unknown() const {
    for (const auto& [k, v] : j_.items()) {
      (void)v;
      if (!seen_.count(k)) fail(k, "unknown field");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_data(const nlohmann::json& j, DataConfig& d) {
  Fields f(j, "data");
  f.parsed("kind", [&](const std::string& s) {
    if (s == "mnist") d.kind = DataKind::mnist;
    else if (s == "seqf") d.kind = DataKind::seqf;
    else if (s == "synthetic") d.kind = DataKind::synthetic;
    else throw ValidationError("expected mnist|seqf|synthetic, got '" + s + "'");
  });
  f.string("mnist_dir", d.mnist_dir);
  f.number("pad_to", d.pad_to);
  f.check("pad_to", d.pad_to == 28 || d.pad_to == 32, "must be 28 or 32");
  f.number("train_limit", d.train_limit);
  f.number("test_limit", d.test_limit);
  f.number("validation_fraction", d.validation_fraction);
  f.check("validation_fraction", d.validation_fraction >= 0 && d.validation_fraction < 1, "must lie in [0, 1)");
  f.string("seqf_train", d.seqf_train);
  f.string("seqf_test", d.seqf_test);
  f.parsed("synthetic_task", [&](const std::string& s) { d.synthetic_task = parse_synthetic(s); });
  f.number("synthetic_size", d.synthetic_size);
  f.number("synthetic_elements", d.synthetic_shape.elements);
  f.number("synthetic_features", d.synthetic_shape.features);
  f.number("synthetic_classes", d.synthetic_shape.classes);
  f.check("synthetic_classes", d.synthetic_shape.classes >= 2, "must be >= 2");
  f.check("synthetic_size", d.synthetic_size >= static_cast<std::size_t>(d.synthetic_shape.classes),
          "must be at least the class count");
  f.number("seed", d.seed);
  f.reject_unknown();
  if (d.kind == DataKind::mnist) {
    if (d.mnist_dir.empty()) {
      const std::string root = data_root();
      if (root.empty()) f.fail("mnist_dir", "not set and SLSTM_DATA_ROOT is unset");
      d.mnist_dir = (std::filesystem::path(root) / "mnist").string();
    }
    for (const char* name : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
                             "t10k-labels-idx1-ubyte"})
      if (!std::filesystem::exists(std::filesystem::path(d.mnist_dir) / name))
        f.fail("mnist_dir", "missing " + (std::filesystem::path(d.mnist_dir) / name).string());
  }
  if (d.kind == DataKind::seqf) {
    if (d.seqf_train.empty()) f.fail("seqf_train", "required for seqf data");
    if (!std::filesystem::exists(d.seqf_train)) f.fail("seqf_train", "no such file " + d.seqf_train);
    if (!d.seqf_test.empty() && !std::filesystem::exists(d.seqf_test))
      f.fail("seqf_test", "no such file " + d.seqf_test);
  }
}

void parse_model(const nlohmann::json& j, ModelConfig& m) {
  Fields f(j, "model");
  f.number("hidden", m.hidden);
  f.check("hidden", m.hidden >= 1, "must be >= 1");
  f.number("layers", m.layers);
  f.check("layers", m.layers == 1 || m.layers == 2, "must be 1 or 2");
  if (const auto* h = f.find("head")) {
    if (!h->is_array()) f.fail("head", "expected an array of hidden sizes");
    m.head.clear();
    for (const auto& v : *h) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) f.fail("head", "sizes must be positive integers");
      m.head.push_back(v.get<Eigen::Index>());
    }
  }
  f.number("v_sig", m.act.v_sig);
  f.number("v_tanh_pos", m.act.v_tanh_pos);
  f.number("v_tanh_neg", m.act.v_tanh_neg);
  f.check("v_sig", m.act.v_sig > 0, "must be positive");
  f.check("v_tanh_pos", m.act.v_tanh_pos > 0, "must be positive");
  f.check("v_tanh_neg", m.act.v_tanh_neg < 0, "must be negative");
  f.number("init_seed", m.init_seed);
  f.reject_unknown();
}

void parse_snn(const nlohmann::json& j, SnnConfig& s) {
  Fields f(j, "snn");
  f.number("time_steps", s.time_steps);
  f.check("time_steps", s.time_steps >= 1, "must be >= 1");
  f.parsed("encoding", [&](const std::string& v) { s.encoding = parse_encoding(v); });
  f.parsed("analog_gate", [&](const std::string& v) {
    s.analog_gate = parse_gate(v);
    if (s.analog_gate != Gate::i && s.analog_gate != Gate::g) throw ValidationError("must be i or g");
  });
  f.boolean("shift", s.shift);
  f.number("surrogate_gamma", s.surrogate_gamma);
  f.check("surrogate_gamma", s.surrogate_gamma >= 0, "must be nonnegative");
  f.string("init_checkpoint", s.init_checkpoint);
  if (!s.init_checkpoint.empty() && !std::filesystem::exists(s.init_checkpoint))
    f.fail("init_checkpoint", "no such file " + s.init_checkpoint);
  f.reject_unknown();
}

void parse_train(const nlohmann::json& j, TrainConfig& t) {
  Fields f(j, "train");
  f.number("epochs", t.epochs);
  f.check("epochs", t.epochs >= 1, "must be >= 1");
  f.number("batch_size", t.batch_size);
  f.check("batch_size", t.batch_size >= 1, "must be >= 1");
  f.number("micro_batch", t.micro_batch);
  f.check("micro_batch", t.micro_batch >= 1, "must be >= 1");
  f.number("workers", t.workers);
  f.check("workers", t.workers >= 1, "must be >= 1");
  f.parsed("optimizer", [&](const std::string& v) { t.optimizer.kind = parse_optimizer(v); });
  f.number("lr", t.optimizer.lr);
  f.check("lr", t.optimizer.lr > 0, "must be positive");
  f.number("beta1", t.optimizer.beta1);
  f.check("beta1", t.optimizer.beta1 >= 0 && t.optimizer.beta1 < 1, "must lie in [0, 1)");
  f.number("beta2", t.optimizer.beta2);
  f.check("beta2", t.optimizer.beta2 >= 0 && t.optimizer.beta2 < 1, "must lie in [0, 1)");
  f.number("eps", t.optimizer.eps);
  f.check("eps", t.optimizer.eps > 0, "must be positive");
  f.number("momentum", t.optimizer.momentum);
  f.check("momentum", t.optimizer.momentum >= 0 && t.optimizer.momentum < 1, "must lie in [0, 1)");
  f.parsed("schedule", [&](const std::string& v) {
    if (v == "constant") t.schedule = LrSchedule::constant;
    else if (v == "cosine") t.schedule = LrSchedule::cosine;
    else throw ValidationError("expected constant|cosine");
  });
  f.number("clip_norm", t.clip_norm);
  f.check("clip_norm", t.clip_norm >= 0, "must be >= 0");
  f.number("seed", t.seed);
  f.boolean("scalar_lif", t.scalar_lif);
  f.boolean("detach_reset", t.detach_reset);
  if (const auto* m = f.find("mask")) {
    Fields mf(*m, "train.mask");
    mf.boolean("weights", t.mask.weights);
    mf.boolean("threshold", t.mask.threshold);
    mf.boolean("leak", t.mask.leak);
    mf.boolean("mem_init", t.mask.mem_init);
    mf.boolean("step_bias", t.mask.step_bias);
    mf.reject_unknown();
  }
  f.reject_unknown();
}

}  // namespace

ConvertOptions convert_options(const SnnConfig& s) {
  ConvertOptions o;
  o.time_steps = s.time_steps;
  o.plan = ConversionPlan::with_analog(s.analog_gate);
  o.shift = s.shift;
  o.surrogate_gamma = s.surrogate_gamma;
  o.encoding = s.encoding;
  return o;
}

std::string data_root() {
  const char* v = std::getenv("SLSTM_DATA_ROOT");
  return v ? std::string(v) : std::string();
}

RunConfig parse_run_config(const nlohmann::json& j, const std::string& kind) {
  if (kind != "ann" && kind != "snn") throw ValidationError("config kind must be ann or snn");
  RunConfig c;
  c.source = j;
  c.train.optimizer.lr = kind == "ann" ? 1e-3 : 1e-4;
  Fields f(j, "");
  f.number("schema_version", c.schema_version);
  if (!j.contains("schema_version")) f.fail("schema_version", "required");
  f.check("schema_version", c.schema_version == kSchemaVersion,
          "unsupported version " + std::to_string(c.schema_version) + " (expected " + std::to_string(kSchemaVersion) + ")");
  if (const auto* d = f.find("data")) parse_data(*d, c.data);
  else parse_data(nlohmann::json::object(), c.data);
  if (const auto* m = f.find("model")) parse_model(*m, c.model);
  if (const auto* s = f.find("snn")) parse_snn(*s, c.snn);
  if (const auto* t = f.find("train")) parse_train(*t, c.train);
  f.string("output_dir", c.output_dir);
  f.check("output_dir", !c.output_dir.empty(), "must not be empty");
  f.reject_unknown();
  return c;
}

RunConfig load_run_config(const std::string& path, const std::string& kind) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config: " + path + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j, kind);
}

Dataset load_dataset(const DataConfig& cfg) {
  Dataset ds;
  SequenceSet train_all;
  switch (cfg.kind) {
    case DataKind::mnist: {
      namespace fs = std::filesystem;
      const fs::path dir(cfg.mnist_dir);
      const auto ti = (dir / "train-images-idx3-ubyte").string(), tl = (dir / "train-labels-idx1-ubyte").string();
      const auto ei = (dir / "t10k-images-idx3-ubyte").string(), el = (dir / "t10k-labels-idx1-ubyte").string();
      for (const auto& p : {ti, tl, ei, el})
        if (!fs::exists(p)) throw ValidationError("data.mnist_dir: missing " + p);
      train_all = take(to_sequences(load_mnist_idx(ti, tl), cfg.pad_to), cfg.train_limit ? cfg.train_limit : SIZE_MAX, cfg.seed);
      ds.test = take(to_sequences(load_mnist_idx(ei, el), cfg.pad_to), cfg.test_limit ? cfg.test_limit : SIZE_MAX, cfg.seed);
      ds.files = {ti, tl, ei, el};
      break;
    }
    case DataKind::seqf:
      if (!std::filesystem::exists(cfg.seqf_train)) throw ValidationError("data.seqf_train: no such file " + cfg.seqf_train);
      train_all = load_feature_tensor(cfg.seqf_train);
      if (cfg.train_limit) train_all = take(train_all, cfg.train_limit, cfg.seed);
      ds.files.push_back(cfg.seqf_train);
      if (!cfg.seqf_test.empty()) {
        ds.test = load_feature_tensor(cfg.seqf_test);
        if (cfg.test_limit) ds.test = take(ds.test, cfg.test_limit, cfg.seed);
        ds.files.push_back(cfg.seqf_test);
      }
      break;
    case DataKind::synthetic: {
      const SequenceSet all = synthetic_task(cfg.synthetic_task, cfg.synthetic_size, cfg.seed, cfg.synthetic_shape);
      // Hold out a fixed fifth as the test split.
      DataSplit s = split(all, 0.2, mix_seed(cfg.seed, 1));
      train_all = std::move(s.train);
      ds.test = std::move(s.validation);
      break;
    }
  }
  DataSplit s = split(train_all, cfg.validation_fraction, mix_seed(cfg.seed, 2));
  ds.train = std::move(s.train);
  ds.validation = std::move(s.validation);
  const int classes = std::max({ds.train.classes, ds.validation.classes, ds.test.classes});
  ds.train.classes = ds.validation.classes = ds.test.classes = classes;
  return ds;
}

AnnModel make_ann(const ModelConfig& cfg, Eigen::Index input, int classes) {
  std::mt19937_64 rng(mix_seed(cfg.init_seed, 0xA11));
  AnnModel m;
  m.act = cfg.act;
  Eigen::Index in = input;
  for (int l = 0; l < cfg.layers; ++l) {
    m.layers.push_back(LSTMWeights::random(in, cfg.hidden, rng));
    in = cfg.hidden;
  }
  std::vector<Eigen::Index> sizes = cfg.head;
  sizes.push_back(classes);
  m.head = ClassifierHead::random(cfg.hidden, sizes, rng);
  m.validate();
  return m;
}

}  // namespace slstm
