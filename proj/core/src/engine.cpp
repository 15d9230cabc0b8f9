#include "engine.hpp"

#include <cmath>
#include <string>

#include "slstm/errors.hpp"

namespace slstm::detail {

Eigen::MatrixXd head_forward(const ClassifierHead& head, const Eigen::MatrixXd& in, HeadTape* tape) {
  Eigen::MatrixXd a = in;
  if (tape) {
    tape->inputs.clear();
    tape->pre.clear();
  }
  for (std::size_t l = 0; l < head.layers.size(); ++l) {
    Eigen::MatrixXd z = head.layers[l].w * a;
    z.colwise() += head.layers[l].b;
    if (tape) {
      tape->inputs.push_back(a);
      tape->pre.push_back(z);
    }
    if (l + 1 < head.layers.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd head_backward(const ClassifierHead& head, const HeadTape& tape,
                              const Eigen::MatrixXd& dlogits, ClassifierHead& grad) {
  Eigen::MatrixXd d = dlogits;
  for (std::size_t l = head.layers.size(); l-- > 0;) {
    grad.layers[l].w.noalias() += d * tape.inputs[l].transpose();
    grad.layers[l].b += d.rowwise().sum();
    Eigen::MatrixXd below = head.layers[l].w.transpose() * d;
    if (l > 0) below = below.cwiseProduct((tape.pre[l - 1].array() > 0.0).cast<double>().matrix());
    d = std::move(below);
  }
  return d;
}

double softmax_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                             Eigen::MatrixXd* dlogits) {
  const Eigen::Index b = logits.cols();
  if (static_cast<std::size_t>(b) != labels.size())
    throw ValidationError("label count disagrees with batch size");
  if (dlogits) dlogits->resize(logits.rows(), b);
  double total = 0;
  for (Eigen::Index j = 0; j < b; ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= logits.rows()) throw ValidationError("label out of range at batch index " + std::to_string(j));
    const double m = logits.col(j).maxCoeff();
    const Eigen::VectorXd e = (logits.col(j).array() - m).exp();
    const double z = e.sum();
    const double loss = std::log(z) - (logits(y, j) - m);
    if (!std::isfinite(loss)) throw NumericFault("non-finite loss", j);
    total += loss;
    if (dlogits) {
      dlogits->col(j) = e / z;
      (*dlogits)(y, j) -= 1.0;
    }
  }
  if (dlogits) *dlogits /= static_cast<double>(b);
  return total / static_cast<double>(b);
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd sig(const Eigen::MatrixXd& z, const HardActConfig& a) {
  return z.unaryExpr([&](double v) { return hard_sigmoid(v, a); });
}
Eigen::MatrixXd tnh(const Eigen::MatrixXd& z, const HardActConfig& a) {
  return z.unaryExpr([&](double v) { return hard_tanh(v, a); });
}
Eigen::MatrixXd dsig(const Eigen::MatrixXd& z, const HardActConfig& a) {
  return z.unaryExpr([&](double v) { return hard_sigmoid_grad(v, a); });
}
Eigen::MatrixXd dtnh(const Eigen::MatrixXd& z, const HardActConfig& a) {
  return z.unaryExpr([&](double v) { return hard_tanh_grad(v, a); });
}

}  // namespace

void ann_step(const LSTMWeights& w, const HardActConfig& act, const Eigen::MatrixXd& x,
              const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& c_prev, Eigen::MatrixXd& h,
              Eigen::MatrixXd& c, AnnStepTape* tape) {
  const Eigen::Index hid = w.hidden();
  Eigen::MatrixXd pre = w.wx * x;
  pre.noalias() += w.wh * h_prev;
  pre.colwise() += w.b;
  std::array<Eigen::MatrixXd, kGateCount> gate;
  gate[0] = sig(pre.middleRows(0, hid), act);
  gate[1] = sig(pre.middleRows(hid, hid), act);
  gate[2] = tnh(pre.middleRows(2 * hid, hid), act);
  gate[3] = sig(pre.middleRows(3 * hid, hid), act);
  c = gate[0].cwiseProduct(c_prev) + gate[1].cwiseProduct(gate[2]);
  Eigen::MatrixXd tc = tnh(c, act);
  h = gate[3].cwiseProduct(tc);
  if (tape) {
    tape->pre_act = std::move(pre);
    tape->gate = std::move(gate);
    tape->c_prev = c_prev;
    tape->h_prev = h_prev;
    tape->c = c;
    tape->tc = std::move(tc);
  }
}

Eigen::MatrixXd ann_forward_batch(const AnnModel& model, const InputStream& stream, AnnTape* tape) {
  const std::size_t layers = model.layers.size();
  const Eigen::Index n_el = stream.elements();
  const Eigen::Index b = stream.batch();
  std::vector<Eigen::MatrixXd> h(layers), c(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    h[l] = Eigen::MatrixXd::Zero(model.layers[l].hidden(), b);
    c[l] = h[l];
  }
  if (tape) {
    tape->layers.assign(layers, std::vector<AnnStepTape>(static_cast<std::size_t>(n_el)));
    tape->h.assign(layers, std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(n_el)));
  }
  for (Eigen::Index n = 0; n < n_el; ++n) {
    for (std::size_t l = 0; l < layers; ++l) {
      const Eigen::MatrixXd& x = l == 0 ? stream.at(n, 0) : h[l - 1];
      Eigen::MatrixXd hn, cn;
      ann_step(model.layers[l], model.act, x, h[l], c[l], hn, cn,
               tape ? &tape->layers[l][static_cast<std::size_t>(n)] : nullptr);
      h[l] = std::move(hn);
      c[l] = std::move(cn);
      if (tape) tape->h[l][static_cast<std::size_t>(n)] = h[l];
    }
  }
  return head_forward(model.head, h.back(), tape ? &tape->head : nullptr);
}

void ann_backward_batch(const AnnModel& model, const InputStream& stream, const AnnTape& tape,
                        const Eigen::MatrixXd& dlogits, AnnModel& grad) {
  const std::size_t layers = model.layers.size();
  const Eigen::Index n_el = stream.elements();
  const Eigen::Index b = stream.batch();
  const HardActConfig& act = model.act;
  std::vector<Eigen::MatrixXd> dh(layers), dc(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    dh[l] = Eigen::MatrixXd::Zero(model.layers[l].hidden(), b);
    dc[l] = dh[l];
  }
  dh.back() += head_backward(model.head, tape.head, dlogits, grad.head);

  for (Eigen::Index n = n_el; n-- > 0;) {
    for (std::size_t l = layers; l-- > 0;) {
      const LSTMWeights& w = model.layers[l];
      LSTMWeights& gw = grad.layers[l];
      const Eigen::Index hid = w.hidden();
      const AnnStepTape& t = tape.layers[l][static_cast<std::size_t>(n)];
      const auto& f = t.gate[0];
      const auto& i = t.gate[1];
      const auto& g = t.gate[2];
      const auto& o = t.gate[3];

      Eigen::MatrixXd dcur = dc[l] + dh[l].cwiseProduct(o).cwiseProduct(dtnh(t.c, act));
      Eigen::MatrixXd dpre(4 * hid, b);
      dpre.middleRows(0, hid) = dcur.cwiseProduct(t.c_prev).cwiseProduct(dsig(t.pre_act.middleRows(0, hid), act));
      dpre.middleRows(hid, hid) = dcur.cwiseProduct(g).cwiseProduct(dsig(t.pre_act.middleRows(hid, hid), act));
      dpre.middleRows(2 * hid, hid) =
          dcur.cwiseProduct(i).cwiseProduct(dtnh(t.pre_act.middleRows(2 * hid, hid), act));
      dpre.middleRows(3 * hid, hid) =
          dh[l].cwiseProduct(t.tc).cwiseProduct(dsig(t.pre_act.middleRows(3 * hid, hid), act));

      const Eigen::MatrixXd& x = l == 0 ? stream.at(n, 0) : tape.h[l - 1][static_cast<std::size_t>(n)];
      gw.wx.noalias() += dpre * x.transpose();
      gw.wh.noalias() += dpre * t.h_prev.transpose();
      gw.b += dpre.rowwise().sum();

      dc[l] = dcur.cwiseProduct(f);
      dh[l].noalias() = w.wh.transpose() * dpre;
      if (l > 0) dh[l - 1].noalias() += w.wx.transpose() * dpre;
    }
  }
}

// ---------------------------------------------------------------------------

SnnBatchOutput snn_forward_batch(const SnnModel& model, const InputStream& stream, int time_steps,
                                 SpikeMode mode, SnnTape* tape) {
  if (time_steps < 1) throw ValidationError("time steps must be >= 1");
  if (stream.spiking() && stream.time_steps() != time_steps)
    throw ValidationError("input stream encoded for a different step count");
  const std::size_t layers = model.layers.size();
  const Eigen::Index n_el = stream.elements();
  const Eigen::Index b = stream.batch();
  const auto steps = static_cast<std::size_t>(time_steps);

  SnnBatchOutput out;
  out.stats.layers.resize(layers);
  // prev_h[l][t], prev_c[l][t]: layer l's outputs of the previous element at step t.
  std::vector<std::vector<Eigen::MatrixXd>> prev_h(layers), prev_c(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(model.layers[l].hidden(), b);
    prev_h[l].assign(steps, z);
    prev_c[l].assign(steps, z);
  }
  if (tape) {
    const auto total = static_cast<std::size_t>(n_el) * steps;
    tape->layers.assign(layers, std::vector<CellStepRecord>(total));
    tape->h.assign(layers, std::vector<Eigen::MatrixXd>(total));
  }
  Eigen::MatrixXd readout = Eigen::MatrixXd::Zero(model.layers.back().hidden(), b);
  std::vector<CellStepState> state(layers);

  for (Eigen::Index n = 0; n < n_el; ++n) {
    for (std::size_t l = 0; l < layers; ++l) state[l] = CellStepState::initial(model.layers[l], b);
    std::vector<Eigen::MatrixXd> below(layers);
    for (int t = 0; t < time_steps; ++t) {
      const auto slot = static_cast<std::size_t>(n) * steps + static_cast<std::size_t>(t);
      for (std::size_t l = 0; l < layers; ++l) {
        CellStepOptions opt;
        opt.mode = mode;
        opt.input_is_spike = l > 0 || stream.spiking();
        opt.stats = &out.stats.layers[l];
        opt.record = tape ? &tape->layers[l][slot] : nullptr;
        const Eigen::MatrixXd& x = l == 0 ? stream.at(n, t) : below[l - 1];
        CellStepOutput o = snn_cell_step(model.layers[l], state[l], x, prev_h[l][static_cast<std::size_t>(t)],
                                         prev_c[l][static_cast<std::size_t>(t)], opt);
        if (tape) tape->h[l][slot] = o.h;
        if (l + 1 == layers && n + 1 == n_el) readout += o.h;
        below[l] = o.h;
        prev_h[l][static_cast<std::size_t>(t)] = std::move(o.h);
        prev_c[l][static_cast<std::size_t>(t)] = std::move(o.c);
      }
    }
  }
  readout /= static_cast<double>(time_steps);
  out.logits = head_forward(model.head, readout, tape ? &tape->head : nullptr);
  out.readout = std::move(readout);
  return out;
}

namespace {

/// Backward through one fire() call. `ds` is dL/d(spike output), `du` on entry is
/// dL/d(membrane after the step) and on exit dL/d(membrane before it).
/// Returns dL/d(pre_act).
Eigen::MatrixXd fire_backward(const LIFGateParams& p, const FireRecord& r, const Eigen::MatrixXd& ds,
                              Eigen::MatrixXd& du, bool detach_reset, LIFGateParams& g) {
  const Eigen::Index units = ds.rows();
  const Eigen::Index batch = ds.cols();
  const bool ternary = p.ternary();
  const double gamma = p.surrogate_gamma;
  Eigen::MatrixXd dp(units, batch);
  for (Eigen::Index i = 0; i < units; ++i) {
    const double th_pos = p.threshold_pos[i];
    const double th_neg = ternary ? p.threshold_neg[i] : 0.0;
    const double lam = p.leak[i];
    double g_th_pos = 0, g_th_neg = 0, g_leak = 0, g_bias = 0;
    for (Eigen::Index j = 0; j < batch; ++j) {
      const double u = r.u_temp(i, j);
      const double dn = du(i, j);
      const double sp = r.s_pos(i, j);
      const double sig_p = gamma / th_pos * triangle((u - th_pos) / th_pos);
      const double dsp = detach_reset ? ds(i, j) : ds(i, j) - th_pos * dn;
      double dut = dn + dsp * sig_p;
      g_th_pos += -dn * sp - dsp * sig_p;
      if (ternary) {
        const double sn = r.s_neg(i, j);
        const double sig_n = gamma / -th_neg * triangle((th_neg - u) / -th_neg);
        const double dsn = detach_reset ? -ds(i, j) : -ds(i, j) - th_neg * dn;
        dut -= dsn * sig_n;
        g_th_neg += -dn * sn + dsn * sig_n;
      }
      g_leak += dut * r.u_prev(i, j);
      g_bias += dut;
      dp(i, j) = dut;
      du(i, j) = lam * dut;
    }
    g.threshold_pos[i] += g_th_pos;
    if (ternary) g.threshold_neg[i] += g_th_neg;
    g.leak[i] += g_leak;
    g.step_bias[i] += g_bias;
  }
  return dp;
}

}  // namespace

void snn_backward_batch(const SnnModel& model, const InputStream& stream, int time_steps,
                        const SnnTape& tape, const Eigen::MatrixXd& dlogits, bool detach_reset,
                        SnnModel& grad) {
  const std::size_t layers = model.layers.size();
  const Eigen::Index n_el = stream.elements();
  const Eigen::Index b = stream.batch();
  const auto steps = static_cast<std::size_t>(time_steps);

  const Eigen::MatrixXd dreadout =
      head_backward(model.head, tape.head, dlogits, grad.head) / static_cast<double>(time_steps);

  // gh[l][t], gc[l][t]: gradient w.r.t. layer l's h/c output at step t of the
  // element currently being processed (contributed by the next element).
  std::vector<std::vector<Eigen::MatrixXd>> gh(layers), gc(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(model.layers[l].hidden(), b);
    gh[l].assign(steps, z);
    gc[l].assign(steps, z);
  }

  for (Eigen::Index n = n_el; n-- > 0;) {
    // du[l][k]: gradient w.r.t. the membrane of unit k after the current step.
    std::vector<std::array<Eigen::MatrixXd, kUnitCount>> du(layers);
    for (std::size_t l = 0; l < layers; ++l)
      for (int k = 0; k < kUnitCount; ++k)
        if (model.layers[l].plan.spiking(static_cast<Unit>(k)))
          du[l][k] = Eigen::MatrixXd::Zero(model.layers[l].hidden(), b);

    for (int t = time_steps; t-- > 0;) {
      const auto ts = static_cast<std::size_t>(t);
      const auto slot = static_cast<std::size_t>(n) * steps + ts;
      Eigen::MatrixXd dx_above;  // gradient w.r.t. this layer's h from the layer above
      for (std::size_t l = layers; l-- > 0;) {
        const SpikingLSTMCell& cell = model.layers[l];
        SpikingLSTMCell& gcell = grad.layers[l];
        const CellStepRecord& r = tape.layers[l][slot];
        const Eigen::Index hid = cell.hidden();

        Eigen::MatrixXd dh = std::move(gh[l][ts]);
        if (l + 1 < layers) dh += dx_above;
        if (l + 1 == layers && n + 1 == n_el) dh += dreadout;

        const auto& f = r.gate[index(Gate::f)];
        const auto& i = r.gate[index(Gate::i)];
        const auto& g = r.gate[index(Gate::g)];
        const auto& o = r.gate[index(Gate::o)];
        const int kc = index(Unit::c_tanh);

        const Eigen::MatrixXd d_o = dh.cwiseProduct(r.s_c);
        const Eigen::MatrixXd ds_c = dh.cwiseProduct(o);
        Eigen::MatrixXd dc = gc[l][ts] +
                             fire_backward(cell.params[kc], r.fire[kc], ds_c, du[l][kc], detach_reset,
                                           gcell.params[kc]);

        std::array<Eigen::MatrixXd, kGateCount> dgate;
        dgate[index(Gate::f)] = dc.cwiseProduct(r.c_in);
        dgate[index(Gate::i)] = dc.cwiseProduct(g);
        dgate[index(Gate::g)] = dc.cwiseProduct(i);
        dgate[index(Gate::o)] = d_o;

        Eigen::MatrixXd dpre(4 * hid, b);
        for (int a = 0; a < kGateCount; ++a) {
          const Gate ga = static_cast<Gate>(a);
          if (cell.plan.spiking(unit_of(ga))) {
            dpre.middleRows(a * hid, hid) =
                fire_backward(cell.params[a], r.fire[a], dgate[a], du[l][a], detach_reset, gcell.params[a]);
          } else {
            const auto p = r.pre_act.middleRows(a * hid, hid);
            Eigen::MatrixXd slope = ga == Gate::g ? dtnh(p, cell.act) : dsig(p, cell.act);
            dpre.middleRows(a * hid, hid) = dgate[a].cwiseProduct(slope);
          }
        }

        const Eigen::MatrixXd& x = l == 0 ? stream.at(n, t) : tape.h[l - 1][slot];
        gcell.weights.wx.noalias() += dpre * x.transpose();
        gcell.weights.wh.noalias() += dpre * r.h_in.transpose();
        gcell.weights.b += dpre.rowwise().sum();

        gc[l][ts] = dc.cwiseProduct(f);
        gh[l][ts].noalias() = cell.weights.wh.transpose() * dpre;
        if (l > 0) dx_above.noalias() = cell.weights.wx.transpose() * dpre;
      }
    }
    for (std::size_t l = 0; l < layers; ++l)
      for (int k = 0; k < kUnitCount; ++k)
        if (model.layers[l].plan.spiking(static_cast<Unit>(k)))
          grad.layers[l].params[k].mem_init += du[l][k].rowwise().sum();
  }
}

// ---------------------------------------------------------------------------

namespace {

LSTMWeights zero_weights(const LSTMWeights& w) { return LSTMWeights::zeros(w.input(), w.hidden()); }

ClassifierHead zero_head(const ClassifierHead& h) {
  ClassifierHead z;
  for (const auto& d : h.layers)
    z.layers.push_back({Eigen::MatrixXd::Zero(d.w.rows(), d.w.cols()), Eigen::VectorXd::Zero(d.b.size())});
  return z;
}

LIFGateParams zero_params(const LIFGateParams& p) {
  LIFGateParams z;
  z.leak = Eigen::VectorXd::Zero(p.leak.size());
  z.threshold_pos = Eigen::VectorXd::Zero(p.threshold_pos.size());
  z.threshold_neg = Eigen::VectorXd::Zero(p.threshold_neg.size());
  z.step_bias = Eigen::VectorXd::Zero(p.step_bias.size());
  z.mem_init = Eigen::VectorXd::Zero(p.mem_init.size());
  z.surrogate_gamma = p.surrogate_gamma;
  return z;
}

}  // namespace

AnnModel zeros_like(const AnnModel& model) {
  AnnModel z{model.act, {}, zero_head(model.head)};
  for (const auto& l : model.layers) z.layers.push_back(zero_weights(l));
  return z;
}

SnnModel zeros_like(const SnnModel& model) {
  SnnModel z{{}, zero_head(model.head), model.time_steps, model.encoding};
  for (const auto& l : model.layers) {
    SpikingLSTMCell c{zero_weights(l.weights), {}, l.plan, l.act};
    for (int k = 0; k < kUnitCount; ++k) c.params[k] = zero_params(l.params[k]);
    z.layers.push_back(std::move(c));
  }
  return z;
}

}  // namespace slstm::detail
