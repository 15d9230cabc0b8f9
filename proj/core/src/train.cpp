#include "slstm/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <thread>

#include "engine.hpp"
#include "slstm/checkpoint.hpp"
#include "slstm/errors.hpp"

namespace slstm {

Batch Batch::from(const SequenceSet& set, const std::vector<std::size_t>& rows) {
  Batch b;
  for (std::size_t r : rows) {
    b.sequences.push_back(set.sample(r));
    b.labels.push_back(set.labels[r]);
    b.indices.push_back(r);
  }
  return b;
}

InputStream make_stream(const Batch& batch, int time_steps, Encoding encoding, std::uint64_t seed) {
  if (batch.size() == 0) throw ValidationError("empty batch");
  const Eigen::Index n_el = batch.sequences.front().rows();
  const Eigen::Index f = batch.sequences.front().cols();
  const auto b = static_cast<Eigen::Index>(batch.size());
  for (const auto& s : batch.sequences)
    if (s.rows() != n_el || s.cols() != f) throw ValidationError("batch sequences disagree in shape");
  std::vector<Eigen::MatrixXd> frames;
  if (encoding == Encoding::direct) {
    for (Eigen::Index n = 0; n < n_el; ++n) {
      Eigen::MatrixXd m(f, b);
      for (Eigen::Index j = 0; j < b; ++j) m.col(j) = batch.sequences[static_cast<std::size_t>(j)].row(n).transpose();
      frames.push_back(std::move(m));
    }
    return InputStream(std::move(frames), n_el, time_steps, false);
  }
  const Eigen::Index rows = n_el * time_steps;
  frames.assign(static_cast<std::size_t>(rows), Eigen::MatrixXd(f, b));
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    const SpikeTrain train = encode_sequence_poisson(batch.sequences[sj], time_steps, mix_seed(seed, batch.indices[sj]));
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index u = 0; u < f; ++u) frames[static_cast<std::size_t>(r)](u, j) = train.at(r, u);
  }
  return InputStream(std::move(frames), n_el, time_steps, true);
}

namespace {

std::int64_t count_correct(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  std::int64_t c = 0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    Eigen::Index arg;
    logits.col(j).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(j)]) ++c;
  }
  return c;
}

}  // namespace

GradResult<AnnModel> ann_backward(const AnnModel& model, const Batch& batch) {
  const InputStream stream = make_stream(batch, 1, Encoding::direct, 0);
  detail::AnnTape tape;
  const Eigen::MatrixXd logits = detail::ann_forward_batch(model, stream, &tape);
  GradResult<AnnModel> r;
  Eigen::MatrixXd dlogits;
  r.loss = detail::softmax_cross_entropy(logits, batch.labels, &dlogits);
  r.correct = count_correct(logits, batch.labels);
  r.grads = detail::zeros_like(model);
  detail::ann_backward_batch(model, stream, tape, dlogits, r.grads);
  return r;
}

GradResult<SnnModel> snn_backward(const SnnModel& model, const Batch& batch, const SnnGradOptions& options) {
  const InputStream stream = make_stream(batch, options.time_steps, options.encoding, options.seed);
  detail::SnnTape tape;
  auto out = detail::snn_forward_batch(model, stream, options.time_steps, options.mode, &tape);
  GradResult<SnnModel> r;
  Eigen::MatrixXd dlogits;
  r.loss = detail::softmax_cross_entropy(out.logits, batch.labels, &dlogits);
  r.correct = count_correct(out.logits, batch.labels);
  r.grads = detail::zeros_like(model);
  detail::snn_backward_batch(model, stream, options.time_steps, tape, dlogits, options.detach_reset, r.grads);
  r.stats = std::move(out.stats);
  return r;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (micro_batch < 1) throw ValidationError("micro_batch must be >= 1");
  if (workers < 1) throw ValidationError("workers must be >= 1");
  if (!(clip_norm >= 0)) throw ValidationError("clip_norm must be >= 0");
  optimizer.validate();
}

void write_metrics_header(std::ostream& out) {
  out << "epoch,split,loss,accuracy,spike_rate_mean,wall_time\n";
}

void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  out << r.epoch << ',' << r.split << ',' << std::setprecision(10) << r.loss << ',' << r.accuracy << ','
      << r.spike_rate << ',' << std::setprecision(4) << std::fixed << r.wall_time << std::defaultfloat << '\n';
}

namespace {

/// Runs fn(chunk) for every chunk index, spreading chunks over `workers` threads.
template <typename Fn>
void parallel_chunks(std::size_t chunks, int workers, Fn fn) {
  const auto w = std::min<std::size_t>(static_cast<std::size_t>(workers), chunks);
  if (w <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c);
    return;
  }
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < w; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t c = t; c < chunks; c += w) fn(c);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<Batch> split_batch(const Batch& batch, std::size_t micro) {
  std::vector<Batch> out;
  for (std::size_t s = 0; s < batch.size(); s += micro) {
    Batch b;
    const std::size_t e = std::min(batch.size(), s + micro);
    for (std::size_t i = s; i < e; ++i) {
      b.sequences.push_back(batch.sequences[i]);
      b.labels.push_back(batch.labels[i]);
      b.indices.push_back(batch.indices[i]);
    }
    out.push_back(std::move(b));
  }
  return out;
}

template <typename Model>
void add_scaled(Model& dst, const Model& src, double scale) {
  auto d = collect_params(dst);
  auto s = collect_params(const_cast<Model&>(src));
  for (std::size_t k = 0; k < d.size(); ++k)
    Eigen::Map<Eigen::VectorXd>(d[k].data, d[k].size) += scale * Eigen::Map<const Eigen::VectorXd>(s[k].data, s[k].size);
}

/// Gradient of the batch mean loss, reduced over micro-batches in index order.
template <typename Model, typename GradFn>
GradResult<Model> reduced_grad(const Model& model, const Batch& batch, std::size_t micro, int workers, GradFn fn) {
  const auto parts = split_batch(batch, micro);
  std::vector<GradResult<Model>> results(parts.size());
  parallel_chunks(parts.size(), workers, [&](std::size_t c) { results[c] = fn(model, parts[c]); });
  GradResult<Model> total;
  total.grads = detail::zeros_like(model);
  const double b = static_cast<double>(batch.size());
  for (std::size_t c = 0; c < parts.size(); ++c) {
    const double w = static_cast<double>(parts[c].size()) / b;
    total.loss += w * results[c].loss;
    total.correct += results[c].correct;
    add_scaled(total.grads, results[c].grads, w);
    total.stats += results[c].stats;
  }
  return total;
}

constexpr std::size_t kEvalBatch = 128;

template <typename Fn>
EvalResult evaluate_impl(const SequenceSet& set, int workers, Fn forward) {
  EvalResult r;
  if (set.empty()) return r;
  const std::size_t chunks = (set.size() + kEvalBatch - 1) / kEvalBatch;
  std::vector<EvalResult> parts(chunks);
  parallel_chunks(chunks, workers, [&](std::size_t c) {
    std::vector<std::size_t> rows;
    for (std::size_t i = c * kEvalBatch; i < std::min(set.size(), (c + 1) * kEvalBatch); ++i) rows.push_back(i);
    const Batch b = Batch::from(set, rows);
    SpikeStats stats;
    const Eigen::MatrixXd logits = forward(b, stats);
    parts[c].loss = detail::softmax_cross_entropy(logits, b.labels, nullptr) * static_cast<double>(b.size());
    parts[c].accuracy = static_cast<double>(count_correct(logits, b.labels));
    parts[c].samples = static_cast<std::int64_t>(b.size());
    parts[c].stats = std::move(stats);
  });
  double loss = 0, correct = 0;
  for (auto& p : parts) {
    loss += p.loss;
    correct += p.accuracy;
    r.samples += p.samples;
    r.stats += p.stats;
  }
  r.loss = loss / static_cast<double>(r.samples);
  r.accuracy = correct / static_cast<double>(r.samples);
  return r;
}

}  // namespace

EvalResult evaluate(const AnnModel& model, const SequenceSet& set, int workers) {
  return evaluate_impl(set, workers, [&](const Batch& b, SpikeStats&) {
    return detail::ann_forward_batch(model, make_stream(b, 1, Encoding::direct, 0), nullptr);
  });
}

EvalResult evaluate(const SnnModel& model, const SequenceSet& set, std::uint64_t seed, int workers) {
  return evaluate_impl(set, workers, [&](const Batch& b, SpikeStats& stats) {
    auto out = detail::snn_forward_batch(model, make_stream(b, model.time_steps, model.encoding, seed),
                                         model.time_steps, SpikeMode::heaviside, nullptr);
    stats = std::move(out.stats);
    return out.logits;
  });
}

namespace {

double spike_rate(const AnnModel&, const SpikeStats&) { return 0.0; }
double spike_rate(const SnnModel& m, const SpikeStats& s) { return s.mean_rate(m); }
void post_step(AnnModel&) {}
void post_step(SnnModel& m) { clamp_lif(m); }

template <typename Model, typename GradFn, typename EvalFn>
FitResult<Model> fit_impl(const Model& initial, const SequenceSet& train, const SequenceSet& validation,
                          const TrainConfig& cfg, GradFn grad_fn, EvalFn eval_fn) {
  cfg.validate();
  initial.validate();
  if (train.empty()) throw ValidationError("training set is empty");
  if (train.features != initial.input_dim())
    throw ValidationError("dataset feature width " + std::to_string(train.features) + " != model input " +
                          std::to_string(initial.input_dim()));
  if (train.classes > initial.classes())
    throw ValidationError("dataset has more classes than the model's head outputs");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  std::ofstream metrics;
  if (!cfg.metrics_path.empty()) {
    metrics.open(cfg.metrics_path, std::ios::trunc);
    if (!metrics) throw Error("cannot open metrics file " + cfg.metrics_path);
    write_metrics_header(metrics);
  }

  FitResult<Model> result{initial, {}, 0, -1.0};
  Model model = initial;
  auto params = collect_params(model);
  Optimizer opt(cfg.optimizer, params);
  const std::size_t steps_per_epoch = (train.size() + cfg.batch_size - 1) / cfg.batch_size;
  const double total_steps = static_cast<double>(steps_per_epoch) * cfg.epochs;
  long step = 0;

  auto diverge = [&](int epoch, const std::string& why) {
    if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, result.model);
    throw TrainingDiverged("training diverged in epoch " + std::to_string(epoch) + ": " + why, epoch);
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = permutation(train.size(), mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0;
    std::int64_t correct = 0;
    SpikeStats stats;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      const std::size_t lo = s * cfg.batch_size;
      const std::size_t hi = std::min(train.size(), lo + cfg.batch_size);
      const Batch batch = Batch::from(train, std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                                                      order.begin() + static_cast<std::ptrdiff_t>(hi)));
      GradResult<Model> g;
      try {
        g = reduced_grad(model, batch, cfg.micro_batch, cfg.workers,
                         [&](const Model& m, const Batch& b) { return grad_fn(m, b, epoch); });
      } catch (const NumericFault& e) {
        diverge(epoch, e.what());
      }
      auto grads = collect_params(g.grads);
      if (cfg.scalar_lif) collapse_to_scalar(grads);
      const double norm = clip_global_norm(grads, cfg.mask, cfg.clip_norm);
      if (!std::isfinite(g.loss) || !std::isfinite(norm)) diverge(epoch, "non-finite loss or gradient");
      double lr = cfg.optimizer.lr;
      if (cfg.schedule == LrSchedule::cosine)
        lr *= 0.5 * (1 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
      opt.step(params, grads, cfg.mask, lr);
      post_step(model);
      ++step;
      loss_sum += g.loss * static_cast<double>(batch.size());
      correct += g.correct;
      stats += g.stats;
    }
    const double n = static_cast<double>(train.size());
    MetricsRow tr{epoch, "train", loss_sum / n, static_cast<double>(correct) / n, spike_rate(model, stats), elapsed()};
    result.history.push_back(tr);
    if (metrics) write_metrics_row(metrics, tr);
    double score = tr.accuracy;
    if (!validation.empty()) {
      EvalResult ev;
      try {
        ev = eval_fn(model, validation);
      } catch (const NumericFault& e) {
        diverge(epoch, e.what());
      }
      MetricsRow va{epoch, "validation", ev.loss, ev.accuracy, spike_rate(model, ev.stats), elapsed()};
      result.history.push_back(va);
      if (metrics) write_metrics_row(metrics, va);
      score = ev.accuracy;
    }
    if (metrics) metrics.flush();
    if (cfg.verbose)
      std::cerr << "epoch " << epoch << " train_loss " << tr.loss << " train_acc " << tr.accuracy << " score "
                << score << " (" << tr.wall_time << " s)\n";
    if (score > result.best_accuracy) {
      result.best_accuracy = score;
      result.best_epoch = epoch;
      result.model = model;
      if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, model);
    }
  }
  return result;
}

}  // namespace

FitResult<AnnModel> fit(const AnnModel& model, const SequenceSet& train, const SequenceSet& validation,
                        const TrainConfig& config) {
  return fit_impl(
      model, train, validation, config, [](const AnnModel& m, const Batch& b, int) { return ann_backward(m, b); },
      [&](const AnnModel& m, const SequenceSet& s) { return evaluate(m, s, config.workers); });
}

FitResult<SnnModel> fit(const SnnModel& model, const SequenceSet& train, const SequenceSet& validation,
                        const TrainConfig& config) {
  return fit_impl(
      model, train, validation, config,
      [&](const SnnModel& m, const Batch& b, int epoch) {
        SnnGradOptions o;
        o.time_steps = m.time_steps;
        o.encoding = m.encoding;
        o.seed = mix_seed(config.seed, 0x10000 + static_cast<std::uint64_t>(epoch));
        o.detach_reset = config.detach_reset;
        return snn_backward(m, b, o);
      },
      [&](const SnnModel& m, const SequenceSet& s) { return evaluate(m, s, config.seed, config.workers); });
}

}  // namespace slstm
