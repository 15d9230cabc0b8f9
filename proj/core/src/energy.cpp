#include "slstm/energy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slstm/errors.hpp"

namespace slstm {

OpTally& OpTally::operator+=(const OpTally& o) {
  multiplies += o.multiplies;
  macs += o.macs;
  accumulates += o.accumulates;
  comparisons += o.comparisons;
  activations += o.activations;
  leak_multiplies += o.leak_multiplies;
  return *this;
}

std::string_view to_string(OpSite s) {
  switch (s) {
    case OpSite::input_projection: return "input_projection";
    case OpSite::recurrent_projection: return "recurrent_projection";
    case OpSite::gate_f: return "gate_f";
    case OpSite::gate_i: return "gate_i";
    case OpSite::gate_g: return "gate_g";
    case OpSite::gate_o: return "gate_o";
    case OpSite::cell_update: return "cell_update";
    case OpSite::c_tanh: return "c_tanh";
    case OpSite::hidden_combine: return "hidden_combine";
  }
  return "?";
}

OpTally LayerOps::total() const {
  OpTally t;
  for (const auto& s : site) t += s;
  return t;
}

OpTally OpCountReport::layers_total() const {
  OpTally t;
  for (const auto& l : layers) t += l.total();
  return t;
}

OpCountReport& OpCountReport::operator+=(const OpCountReport& o) {
  if (layers.empty()) layers.resize(o.layers.size());
  if (layers.size() != o.layers.size()) throw ValidationError("op report layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l)
    for (int s = 0; s < kSiteCount; ++s) layers[l].site[s] += o.layers[l].site[s];
  head += o.head;
  return *this;
}

namespace {

nlohmann::json tally_json(const OpTally& t) {
  return {{"multiplies", t.multiplies},   {"macs", t.macs},
          {"accumulates", t.accumulates}, {"comparisons", t.comparisons},
          {"activations", t.activations}, {"leak_multiplies", t.leak_multiplies},
          {"flops", t.flops()}};
}

OpSite gate_site(int k) {
  switch (k) {
    case 0: return OpSite::gate_f;
    case 1: return OpSite::gate_i;
    case 2: return OpSite::gate_g;
    case 3: return OpSite::gate_o;
    default: return OpSite::c_tanh;
  }
}

OpTally head_ops(const ClassifierHead& head) {
  OpTally t;
  for (const auto& d : head.layers) t.macs += d.w.rows() * d.w.cols();
  return t;
}

}  // namespace

nlohmann::json OpCountReport::to_json() const {
  nlohmann::json j;
  j["time_steps"] = time_steps;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : layers) {
    nlohmann::json sites;
    for (int s = 0; s < kSiteCount; ++s)
      sites[std::string(to_string(static_cast<OpSite>(s)))] = tally_json(l.site[s]);
    j["layers"].push_back({{"sites", sites}, {"total", tally_json(l.total())}});
  }
  j["head"] = tally_json(head);
  j["total"] = tally_json(total());
  j["flops"] = flops();
  return j;
}

OpCountReport count_ops_ann(const AnnModel& model, Eigen::Index elements) {
  OpCountReport r;
  r.time_steps = 1;
  for (const auto& w : model.layers) {
    const std::int64_t h = w.hidden();
    LayerOps ops;
    ops[OpSite::input_projection].macs = 4 * h * w.input() * elements;
    ops[OpSite::recurrent_projection].macs = 4 * h * h * elements;
    for (int k = 0; k < kUnitCount; ++k) ops[gate_site(k)].activations = h * elements;
    ops[OpSite::cell_update].multiplies = 2 * h * elements;
    ops[OpSite::cell_update].accumulates = h * elements;
    ops[OpSite::hidden_combine].multiplies = h * elements;
    r.layers.push_back(ops);
  }
  r.head = head_ops(model.head);
  return r;
}

LayerOps count_layer_ops_snn(const LayerSpikeStats& st, const SpikingLSTMCell& cell, bool analog_input) {
  const std::int64_t h = cell.hidden();
  const std::int64_t cs = st.cell_steps;
  LayerOps ops;
  if (analog_input)
    ops[OpSite::input_projection].macs = 4 * h * cell.input() * st.analog_inputs;
  else
    ops[OpSite::input_projection].accumulates = 4 * h * st.input_events;
  ops[OpSite::recurrent_projection].accumulates = 4 * h * st.hidden_in_events;
  for (int k = 0; k < kUnitCount; ++k) {
    OpTally& t = ops[gate_site(k)];
    if (!cell.plan.spiking(static_cast<Unit>(k))) {
      t.activations = h * cs;
      continue;
    }
    const auto& p = cell.params[k];
    t.accumulates = h * cs + st.unit_events[k];
    t.comparisons = (p.ternary() ? 2 : 1) * h * cs;
    t.leak_multiplies = (p.leak.array() != 1.0).count() * cs;
  }
  const int spiking_factor = cell.plan.spiking(Unit::i) ? index(Unit::i) : index(Unit::g);
  ops[OpSite::cell_update].accumulates = st.unit_events[index(Unit::f)] + st.unit_events[spiking_factor];
  ops[OpSite::hidden_combine].comparisons = h * cs;
  return ops;
}

OpCountReport count_ops_snn(const SpikeStats& stats, const SnnModel& model, Eigen::Index elements,
                            int time_steps, Encoding encoding) {
  if (stats.layers.size() != model.layers.size())
    throw ValidationError("spike stats cover " + std::to_string(stats.layers.size()) +
                          " layers, model has " + std::to_string(model.layers.size()));
  if (elements < 1 || time_steps < 1) throw ValidationError("elements and time steps must be >= 1");
  const std::int64_t per_seq = elements * time_steps;
  const std::int64_t seqs = stats.layers.front().cell_steps / per_seq;
  OpCountReport r;
  r.time_steps = time_steps;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const SpikingLSTMCell& cell = model.layers[l];
    const LayerSpikeStats& st = stats.layers[l];
    if (st.cell_steps % per_seq != 0 || st.cell_steps / per_seq != seqs)
      throw ValidationError("spike stats of layer " + std::to_string(l) +
                            " do not cover whole sequences of N*T steps");
    r.layers.push_back(count_layer_ops_snn(st, cell, l == 0 && encoding == Encoding::direct));
  }
  OpTally head = head_ops(model.head);
  head.macs *= seqs;
  head.accumulates = model.layers.back().hidden() * time_steps * seqs;
  r.head = head;
  return r;
}

OpCountReport count_ops_priorwork(const SnnModel& model, Eigen::Index elements, int time_steps) {
  if (elements < 1 || time_steps < 1) throw ValidationError("elements and time steps must be >= 1");
  const std::int64_t cs = elements * time_steps;
  OpCountReport r;
  r.time_steps = time_steps;
  for (const auto& cell : model.layers) {
    const std::int64_t h = cell.hidden();
    LayerOps ops;
    ops[OpSite::input_projection].macs = 4 * h * cell.input() * cs;
    ops[OpSite::recurrent_projection].macs = 4 * h * h * cs;
    for (int k = 0; k < kUnitCount; ++k) {
      OpTally& t = ops[gate_site(k)];
      if (!cell.plan.spiking(static_cast<Unit>(k))) {
        t.activations = h * cs;
        continue;
      }
      t.accumulates = h * cs;
      t.comparisons = (is_tanh_unit(static_cast<Unit>(k)) ? 2 : 1) * h * cs;
    }
    ops[OpSite::cell_update].multiplies = 2 * h * cs;
    ops[OpSite::cell_update].accumulates = h * cs;
    ops[OpSite::hidden_combine].multiplies = h * cs;
    r.layers.push_back(ops);
  }
  r.head = head_ops(model.head);
  r.head.accumulates = model.layers.back().hidden() * time_steps;
  return r;
}

void audit_multipliers(const OpCountReport& report, Encoding encoding) {
  for (std::size_t l = 0; l < report.layers.size(); ++l)
    for (int s = 0; s < kSiteCount; ++s) {
      const OpSite site = static_cast<OpSite>(s);
      if (l == 0 && site == OpSite::input_projection && encoding == Encoding::direct) continue;
      const OpTally& t = report.layers[l].site[s];
      if (t.multiplies != 0 || t.macs != 0)
        throw MultiplierAuditError("layer " + std::to_string(l) + " site " +
                                   std::string(to_string(site)) + ": " +
                                   std::to_string(t.multiplies + t.macs) + " multiplications");
    }
}

void EnergyModel::validate() const {
  for (double e : {e_mac, e_mul, e_ac, e_compare, e_act})
    if (!(e >= 0) || !std::isfinite(e)) throw ValidationError("per-op energies must be finite and nonnegative");
  for (const auto& p : platforms)
    if (!(p.e_compute >= 0) || !(p.e_static >= 0))
      throw ValidationError("platform " + p.name + " has a negative energy");
}

EnergyModel EnergyModel::from_json(const nlohmann::json& j) {
  EnergyModel em;
  if (!j.is_object()) throw ValidationError("energy model must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto num = [&](double& dst) {
      if (!value.is_number()) throw ValidationError("energy." + key + ": expected a number");
      dst = value.get<double>();
    };
    if (key == "e_mac") num(em.e_mac);
    else if (key == "e_mul") num(em.e_mul);
    else if (key == "e_ac") num(em.e_ac);
    else if (key == "e_compare") num(em.e_compare);
    else if (key == "e_act") num(em.e_act);
    else if (key == "platforms") {
      if (!value.is_array()) throw ValidationError("energy.platforms: expected an array");
      em.platforms.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        const auto& p = value[i];
        const std::string path = "energy.platforms[" + std::to_string(i) + "]";
        if (!p.is_object() || !p.contains("name") || !p.contains("e_compute") || !p.contains("e_static"))
          throw ValidationError(path + ": needs name, e_compute and e_static");
        for (const auto& [k, v] : p.items())
          if (k != "name" && k != "e_compute" && k != "e_static")
            throw ValidationError(path + "." + k + ": unknown field");
        if (!p["name"].is_string() || !p["e_compute"].is_number() || !p["e_static"].is_number())
          throw ValidationError(path + ": wrong field type");
        em.platforms.push_back({p["name"].get<std::string>(), p["e_compute"].get<double>(),
                                p["e_static"].get<double>()});
      }
    } else {
      throw ValidationError("energy." + key + ": unknown field");
    }
  }
  em.validate();
  return em;
}

nlohmann::json EnergyBreakdown::to_json() const {
  nlohmann::json j = {{"mac", mac},           {"multiply", multiply}, {"accumulate", accumulate},
                      {"compare", compare},   {"activation", activation}, {"leak", leak},
                      {"head", head},         {"digital_total", digital_total}};
  nlohmann::json nm = nlohmann::json::object();
  for (const auto& [name, e] : neuromorphic) nm[name] = e;
  j["neuromorphic"] = nm;
  return j;
}

double neuromorphic_energy(std::int64_t flops, int time_steps, double e_compute, double e_static) {
  return static_cast<double>(flops) * e_compute + static_cast<double>(time_steps) * e_static;
}

EnergyBreakdown estimate_energy(const OpCountReport& report, const EnergyModel& em) {
  em.validate();
  const OpTally t = report.total();
  EnergyBreakdown e;
  e.mac = static_cast<double>(t.macs) * em.e_mac;
  e.multiply = static_cast<double>(t.multiplies) * em.e_mul;
  e.accumulate = static_cast<double>(t.accumulates) * em.e_ac;
  e.compare = static_cast<double>(t.comparisons) * em.e_compare;
  e.activation = static_cast<double>(t.activations) * em.e_act;
  e.leak = static_cast<double>(t.leak_multiplies) * em.e_mul;
  const OpTally& h = report.head;
  e.head = static_cast<double>(h.macs) * em.e_mac + static_cast<double>(h.multiplies) * em.e_mul +
           static_cast<double>(h.accumulates) * em.e_ac + static_cast<double>(h.comparisons) * em.e_compare +
           static_cast<double>(h.activations) * em.e_act + static_cast<double>(h.leak_multiplies) * em.e_mul;
  e.digital_total = e.mac + e.multiply + e.accumulate + e.compare + e.activation + e.leak;
  for (const auto& p : em.platforms)
    e.neuromorphic.emplace_back(p.name, neuromorphic_energy(t.flops(), report.time_steps, p.e_compute, p.e_static));
  return e;
}

void write_energy_csv(std::ostream& out, const std::vector<std::pair<std::string, EnergyBreakdown>>& rows) {
  out << "model,mac,multiply,accumulate,compare,activation,leak,head,digital_total";
  if (!rows.empty())
    for (const auto& [name, e] : rows.front().second.neuromorphic) {
      (void)e;
      out << ',' << name;
    }
  out << '\n';
  for (const auto& [model, e] : rows) {
    out << model << ',' << e.mac << ',' << e.multiply << ',' << e.accumulate << ',' << e.compare << ','
        << e.activation << ',' << e.leak << ',' << e.head << ',' << e.digital_total;
    for (const auto& [name, v] : e.neuromorphic) {
      (void)name;
      out << ',' << v;
    }
    out << '\n';
  }
}

void write_sparsity_csv(std::ostream& out, const SpikeStats& stats, const SnnModel& model, int bins) {
  if (bins < 1) throw ValidationError("histogram needs at least one bin");
  out << "layer,unit,bin_lo,bin_hi,neurons\n";
  for (std::size_t l = 0; l < stats.layers.size() && l < model.layers.size(); ++l) {
    const LayerSpikeStats& st = stats.layers[l];
    for (int k = 0; k < kUnitCount; ++k) {
      if (!model.layers[l].plan.spiking(static_cast<Unit>(k))) continue;
      std::vector<std::int64_t> hist(static_cast<std::size_t>(bins), 0);
      for (std::int64_t c : st.neuron_events[k]) {
        const double rate = st.cell_steps > 0 ? static_cast<double>(c) / static_cast<double>(st.cell_steps) : 0.0;
        const int b = std::min(bins - 1, static_cast<int>(rate * bins));
        ++hist[static_cast<std::size_t>(b)];
      }
      for (int b = 0; b < bins; ++b)
        out << l << ',' << to_string(static_cast<Unit>(k)) << ',' << static_cast<double>(b) / bins << ','
            << static_cast<double>(b + 1) / bins << ',' << hist[static_cast<std::size_t>(b)] << '\n';
    }
  }
}

}  // namespace slstm
