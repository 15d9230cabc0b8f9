#include "slstm/lstm.hpp"

#include <string>

#include "engine.hpp"
#include "slstm/errors.hpp"

namespace slstm {

namespace {

std::int64_t nonzeros(const Eigen::MatrixXd& m) { return (m.array() != 0.0).count(); }

void require_ternary(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double v = m(i, j);
      if (v != 0.0 && v != 1.0 && v != -1.0)
        throw MultiplierAuditError(std::string(what) + " carries a multi-bit value at row " +
                                   std::to_string(i) + "; a spike was required");
    }
}

void tally_neurons(std::vector<std::int64_t>& counts, const Eigen::MatrixXd& spikes) {
  if (counts.empty()) counts.assign(static_cast<std::size_t>(spikes.rows()), 0);
  for (Eigen::Index j = 0; j < spikes.cols(); ++j)
    for (Eigen::Index i = 0; i < spikes.rows(); ++i)
      if (spikes(i, j) != 0.0) ++counts[static_cast<std::size_t>(i)];
}

Eigen::MatrixXd hard_apply(const Eigen::MatrixXd& z, Gate g, const HardActConfig& act) {
  if (g == Gate::g) return z.unaryExpr([&](double v) { return hard_tanh(v, act); });
  return z.unaryExpr([&](double v) { return hard_sigmoid(v, act); });
}

}  // namespace

AnnCellOutput ann_cell_step(const LSTMWeights& weights, const Eigen::VectorXd& h_prev,
                            const Eigen::VectorXd& c_prev, const Eigen::VectorXd& x,
                            const HardActConfig& cfg) {
  const Eigen::Index h = weights.hidden();
  if (x.size() != weights.input() || h_prev.size() != h || c_prev.size() != h)
    throw ValidationError("ann_cell_step: dimension mismatch");
  Eigen::MatrixXd h_out, c_out;
  detail::ann_step(weights, cfg, x, h_prev, c_prev, h_out, c_out, nullptr);
  return {h_out.col(0), c_out.col(0)};
}

Eigen::VectorXd ann_forward(const AnnModel& model, const Eigen::MatrixXd& sequence) {
  if (sequence.rows() == 0) throw ValidationError("empty sequence");
  if (sequence.cols() != model.input_dim())
    throw ValidationError("sequence feature width " + std::to_string(sequence.cols()) +
                          " != model input " + std::to_string(model.input_dim()));
  const InputStream stream(sequence, SnnRunOptions{1, Encoding::direct, 0});
  return detail::ann_forward_batch(model, stream, nullptr).col(0);
}

CellStepState CellStepState::initial(const SpikingLSTMCell& cell, Eigen::Index batch) {
  CellStepState s;
  for (int k = 0; k < kUnitCount; ++k)
    if (cell.plan.spiking(static_cast<Unit>(k))) s.membrane[k] = initial_membrane(cell.params[k], batch);
  return s;
}

CellStepOutput snn_cell_step(const SpikingLSTMCell& cell, CellStepState& state,
                             const Eigen::MatrixXd& x_in, const Eigen::MatrixXd& h_in,
                             const Eigen::MatrixXd& c_in, const CellStepOptions& options) {
  cell.plan.validate();
  const Eigen::Index hid = cell.hidden();
  const Eigen::Index batch = h_in.cols();
  if (x_in.rows() != cell.input() || h_in.rows() != hid || c_in.rows() != hid ||
      x_in.cols() != batch || c_in.cols() != batch)
    throw ValidationError("snn_cell_step: dimension mismatch");
  if (options.mode == SpikeMode::heaviside) {
    if (options.input_is_spike) require_ternary(x_in, "x_in");
    require_ternary(h_in, "h_in");
  }

  Eigen::MatrixXd pre = cell.weights.wx * x_in;
  pre.noalias() += cell.weights.wh * h_in;
  pre.colwise() += cell.weights.b;

  std::array<Eigen::MatrixXd, kGateCount> gate;
  std::array<FireRecord, kUnitCount>* fire_rec = options.record ? &options.record->fire : nullptr;
  for (int a = 0; a < kGateCount; ++a) {
    const Gate g = static_cast<Gate>(a);
    const Eigen::MatrixXd p = pre.middleRows(a * hid, hid);
    if (cell.plan.spiking(unit_of(g))) {
      fire(state.membrane[a], p, cell.params[a], options.mode, gate[a],
           fire_rec ? &(*fire_rec)[a] : nullptr);
    } else {
      gate[a] = hard_apply(p, g, cell.act);
    }
  }

  const auto& f = gate[index(Gate::f)];
  const auto& i = gate[index(Gate::i)];
  const auto& g = gate[index(Gate::g)];
  const auto& o = gate[index(Gate::o)];
  CellStepOutput out;
  out.c = f.cwiseProduct(c_in) + i.cwiseProduct(g);
  Eigen::MatrixXd s_c;
  const int kc = index(Unit::c_tanh);
  fire(state.membrane[kc], out.c, cell.params[kc], options.mode, s_c,
       fire_rec ? &(*fire_rec)[kc] : nullptr);
  out.h = o.cwiseProduct(s_c);

  if (options.stats) {
    LayerSpikeStats& st = *options.stats;
    st.cell_steps += batch;
    if (options.input_is_spike)
      st.input_events += nonzeros(x_in);
    else
      st.analog_inputs += batch;
    st.hidden_in_events += nonzeros(h_in);
    st.hidden_out_events += nonzeros(out.h);
    for (int k = 0; k < kUnitCount; ++k) {
      if (!cell.plan.spiking(static_cast<Unit>(k))) continue;
      const Eigen::MatrixXd& s = k == kc ? s_c : gate[k];
      st.unit_events[k] += nonzeros(s);
      tally_neurons(st.neuron_events[k], s);
    }
  }
  if (options.record) {
    CellStepRecord& r = *options.record;
    r.pre_act = std::move(pre);
    r.gate = std::move(gate);
    r.s_c = std::move(s_c);
    r.h_in = h_in;
    r.c_in = c_in;
    r.c_out = out.c;
  }
  return out;
}

InputStream::InputStream(const Eigen::MatrixXd& sequence, const SnnRunOptions& options)
    : spiking_(options.encoding == Encoding::poisson),
      time_steps_(options.time_steps),
      elements_(sequence.rows()) {
  if (options.time_steps < 1) throw ValidationError("time steps must be >= 1");
  if (elements_ == 0) throw ValidationError("empty sequence");
  if (spiking_) {
    const SpikeTrain train = encode_sequence_poisson(sequence, time_steps_, options.seed);
    frames_.reserve(static_cast<std::size_t>(train.steps()));
    for (Eigen::Index r = 0; r < train.steps(); ++r) frames_.emplace_back(train.row(r));
  } else {
    frames_.reserve(static_cast<std::size_t>(elements_));
    for (Eigen::Index n = 0; n < elements_; ++n) frames_.emplace_back(sequence.row(n).transpose());
  }
}

InputStream::InputStream(std::vector<Eigen::MatrixXd> frames, Eigen::Index elements,
                         int time_steps, bool spiking)
    : spiking_(spiking), time_steps_(time_steps), elements_(elements), frames_(std::move(frames)) {
  if (time_steps < 1) throw ValidationError("time steps must be >= 1");
  if (elements < 1) throw ValidationError("empty sequence");
  const auto expected = static_cast<std::size_t>(spiking ? elements * time_steps : elements);
  if (frames_.size() != expected) throw ValidationError("input stream frame count mismatch");
}

const Eigen::MatrixXd& InputStream::at(Eigen::Index element, int step) const {
  if (!spiking_) return frames_[static_cast<std::size_t>(element)];
  return frames_[static_cast<std::size_t>(element * time_steps_ + step)];
}

SnnForwardResult snn_forward(const SnnModel& model, const Eigen::MatrixXd& sequence,
                             const SnnRunOptions& options) {
  if (sequence.cols() != model.input_dim())
    throw ValidationError("sequence feature width " + std::to_string(sequence.cols()) +
                          " != model input " + std::to_string(model.input_dim()));
  const InputStream stream(sequence, options);
  auto out = detail::snn_forward_batch(model, stream, options.time_steps, SpikeMode::heaviside,
                                       nullptr);
  SnnForwardResult r;
  r.logits = out.logits.col(0);
  r.ops = count_ops_snn(out.stats, model, sequence.rows(), options.time_steps, options.encoding);
  r.stats = std::move(out.stats);
  return r;
}

}  // namespace slstm
