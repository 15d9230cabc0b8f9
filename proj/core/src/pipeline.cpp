#include "slstm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "engine.hpp"
#include "slstm/errors.hpp"

namespace slstm {

std::pair<Eigen::Index, Eigen::Index> PipelineSchedule::active_range(Eigen::Index tick) const {
  return {std::max<Eigen::Index>(1, tick - time_steps + 1), std::min(elements, tick)};
}

Eigen::Index PipelineSchedule::active_count(Eigen::Index tick) const {
  const auto [lo, hi] = active_range(tick);
  return std::max<Eigen::Index>(0, hi - lo + 1);
}

Eigen::Index PipelineSchedule::max_concurrency() const {
  Eigen::Index m = 0;
  for (Eigen::Index k = 1; k <= ticks(); ++k) m = std::max(m, active_count(k));
  return m;
}

std::vector<ScheduleEntry> PipelineSchedule::dependencies(Eigen::Index element, int step) const {
  std::vector<ScheduleEntry> d;
  if (step > 1) d.push_back({element, step - 1, tick_of(element, step - 1)});
  if (element > 1) d.push_back({element - 1, step, tick_of(element - 1, step)});
  return d;
}

PipelineSchedule build_schedule(Eigen::Index elements, int time_steps) {
  if (elements < 1 || time_steps < 1) throw ValidationError("schedule needs N >= 1 and T >= 1");
  PipelineSchedule s;
  s.elements = elements;
  s.time_steps = time_steps;
  for (Eigen::Index k = 1; k <= s.ticks(); ++k) {
    const auto [lo, hi] = s.active_range(k);
    for (Eigen::Index n = lo; n <= hi; ++n) s.entries.push_back({n, static_cast<int>(k - n + 1), k});
  }
  return s;
}

PipelineResult simulate_pipelined(const SnnModel& model, const Eigen::MatrixXd& sequence,
                                  const SnnRunOptions& options) {
  if (sequence.cols() != model.input_dim())
    throw ValidationError("sequence feature width " + std::to_string(sequence.cols()) +
                          " != model input " + std::to_string(model.input_dim()));
  const InputStream stream(sequence, options);
  const PipelineSchedule sched = build_schedule(sequence.rows(), options.time_steps);
  const Eigen::Index n_el = sched.elements;
  const int T = sched.time_steps;
  const std::size_t layers = model.layers.size();

  struct Slot {
    Eigen::MatrixXd h, c;
    Eigen::Index tick = 0;  // 0 = not produced
  };
  // out[n][l][tau], 0-based; state[n][l] live while element n is in flight.
  std::vector<std::vector<std::vector<Slot>>> out(
      static_cast<std::size_t>(n_el), std::vector<std::vector<Slot>>(layers, std::vector<Slot>(static_cast<std::size_t>(T))));
  std::vector<std::vector<CellStepState>> state(static_cast<std::size_t>(n_el), std::vector<CellStepState>(layers));
  std::vector<int> last_step(static_cast<std::size_t>(n_el), 0);
  std::vector<Eigen::MatrixXd> zeros;
  for (const auto& cell : model.layers) zeros.push_back(Eigen::MatrixXd::Zero(cell.hidden(), 1));

  PipelineResult res;
  res.stats.layers.resize(layers);
  Eigen::MatrixXd readout = Eigen::MatrixXd::Zero(model.layers.back().hidden(), 1);

  std::size_t e = 0;
  for (Eigen::Index k = 1; k <= sched.ticks(); ++k) {
    TickRecord rec;
    rec.tick = k;
    for (; e < sched.entries.size() && sched.entries[e].tick == k; ++e) {
      const Eigen::Index n = sched.entries[e].element - 1;
      const int tau = sched.entries[e].step - 1;
      const auto un = static_cast<std::size_t>(n);
      const auto ut = static_cast<std::size_t>(tau);
      if (last_step[un] != tau) throw Error("pipeline dependency violated: element step out of order");
      if (tau == 0)
        for (std::size_t l = 0; l < layers; ++l) state[un][l] = CellStepState::initial(model.layers[l], 1);
      ++rec.active_blocks;
      for (std::size_t l = 0; l < layers; ++l) {
        const Eigen::MatrixXd* h_in = &zeros[l];
        const Eigen::MatrixXd* c_in = &zeros[l];
        if (n > 0) {
          const Slot& prev = out[un - 1][l][ut];
          if (prev.tick == 0 || prev.tick >= k)
            throw Error("pipeline dependency violated: h/c of element " + std::to_string(n) +
                        " consumed at tick " + std::to_string(k) + " before it was produced");
          h_in = &prev.h;
          c_in = &prev.c;
        }
        LayerSpikeStats tick_stats;
        CellStepOptions opt;
        opt.input_is_spike = l > 0 || stream.spiking();
        opt.stats = &tick_stats;
        const Eigen::MatrixXd& x = l == 0 ? stream.at(n, tau) : out[un][l - 1][ut].h;
        CellStepOutput o = snn_cell_step(model.layers[l], state[un][l], x, *h_in, *c_in, opt);
        rec.ops += count_layer_ops_snn(tick_stats, model.layers[l], l == 0 && !stream.spiking()).total();
        res.stats.layers[l] += tick_stats;
        if (l + 1 == layers && n + 1 == n_el) readout += o.h;
        out[un][l][ut] = {std::move(o.h), std::move(o.c), k};
      }
      last_step[un] = tau + 1;
    }
    res.trace.push_back(rec);
  }
  readout /= static_cast<double>(T);
  res.logits = detail::head_forward(model.head, readout, nullptr).col(0);
  res.ops = count_ops_snn(res.stats, model, n_el, T, options.encoding);
  return res;
}

void write_trace_csv(std::ostream& out, const std::vector<TickRecord>& trace) {
  out << "tick,active_blocks,accumulates,macs,comparisons,multiplies,activations,leak_multiplies\n";
  for (const auto& r : trace)
    out << r.tick << ',' << r.active_blocks << ',' << r.ops.accumulates << ',' << r.ops.macs << ','
        << r.ops.comparisons << ',' << r.ops.multiplies << ',' << r.ops.activations << ','
        << r.ops.leak_multiplies << '\n';
}

void LatencyModel::validate() const {
  for (double v : {mac, multiply, accumulate, compare, activation})
    if (!(v > 0) || !std::isfinite(v)) throw ValidationError("unit latencies must be positive");
  if (width < 1) throw ValidationError("latency width must be >= 1");
  if (blocks < 0) throw ValidationError("latency blocks must be >= 0");
  if (stages < 1) throw ValidationError("latency stages must be >= 1");
}

LatencyModel LatencyModel::from_json(const nlohmann::json& j) {
  LatencyModel lm;
  if (!j.is_object()) throw ValidationError("latency: expected an object");
  for (const auto& [key, v] : j.items()) {
    auto num = [&](double& dst) {
      if (!v.is_number()) throw ValidationError("latency." + key + ": expected a number");
      dst = v.get<double>();
    };
    auto integer = [&](std::int64_t& dst) {
      if (!v.is_number_integer()) throw ValidationError("latency." + key + ": expected an integer");
      dst = v.get<std::int64_t>();
    };
    if (key == "mac") num(lm.mac);
    else if (key == "multiply") num(lm.multiply);
    else if (key == "accumulate") num(lm.accumulate);
    else if (key == "compare") num(lm.compare);
    else if (key == "activation") num(lm.activation);
    else if (key == "width") integer(lm.width);
    else if (key == "blocks") integer(lm.blocks);
    else if (key == "stages") integer(lm.stages);
    else throw ValidationError("latency." + key + ": unknown field");
  }
  lm.validate();
  return lm;
}

std::string_view to_string(ExecMode m) {
  switch (m) {
    case ExecMode::proposed: return "proposed";
    case ExecMode::nonspiking: return "nonspiking";
    case ExecMode::priorwork: return "priorwork";
  }
  return "?";
}

nlohmann::json LatencyReport::to_json() const {
  return {{"mode", std::string(to_string(mode))},
          {"ticks", ticks},
          {"stretch", stretch},
          {"block_cost", block_cost},
          {"latency", latency}};
}

OpTally per_block(const OpCountReport& report, std::int64_t invocations) {
  if (invocations < 1) throw ValidationError("block invocations must be >= 1");
  const OpTally t = report.layers_total();
  auto c = [&](std::int64_t v) { return (v + invocations - 1) / invocations; };
  OpTally b;
  b.multiplies = c(t.multiplies);
  b.macs = c(t.macs);
  b.accumulates = c(t.accumulates);
  b.comparisons = c(t.comparisons);
  b.activations = c(t.activations);
  b.leak_multiplies = c(t.leak_multiplies);
  return b;
}

LatencyReport latency_report(const PipelineSchedule& schedule, const OpTally& block_ops, const LatencyModel& lm,
                             ExecMode mode) {
  lm.validate();
  auto lanes = [&](std::int64_t count) { return static_cast<double>((count + lm.width - 1) / lm.width); };
  LatencyReport r;
  r.mode = mode;
  r.block_cost = lanes(block_ops.macs) * lm.mac + lanes(block_ops.multiplies + block_ops.leak_multiplies) * lm.multiply +
                 lanes(block_ops.accumulates) * lm.accumulate + lanes(block_ops.comparisons) * lm.compare +
                 lanes(block_ops.activations) * lm.activation;
  const Eigen::Index n = schedule.elements;
  const Eigen::Index t = schedule.time_steps;
  switch (mode) {
    case ExecMode::proposed:
      r.ticks = n + t - 1;
      if (lm.blocks > 0) {
        const std::int64_t capacity = lm.blocks * lm.stages;
        r.stretch = (std::min(n, t) + capacity - 1) / capacity;
      }
      break;
    case ExecMode::nonspiking: r.ticks = n; break;
    case ExecMode::priorwork: r.ticks = t * n; break;
  }
  r.latency = static_cast<double>(r.ticks) * static_cast<double>(r.stretch) * r.block_cost;
  return r;
}

}  // namespace slstm
