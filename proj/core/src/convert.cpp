#include "slstm/convert.hpp"

#include <ostream>
#include <string>

#include "engine.hpp"
#include "slstm/errors.hpp"
#include "slstm/lstm.hpp"

namespace slstm {

AnnModel nonspiking_twin(const SnnModel& snn) {
  AnnModel a;
  a.act = snn.layers.front().act;
  for (const auto& c : snn.layers) a.layers.push_back(c.weights);
  a.head = snn.head;
  return a;
}

SnnModel convert(const AnnModel& ann, const ConvertOptions& options) {
  ann.validate();
  options.plan.validate();
  if (options.time_steps < 1) throw ValidationError("time steps must be >= 1");
  if (!(options.surrogate_gamma >= 0)) throw ValidationError("surrogate gamma must be nonnegative");
  const HardActConfig& a = ann.act;
  SnnModel snn;
  snn.head = ann.head;
  snn.time_steps = options.time_steps;
  snn.encoding = options.encoding;
  for (const auto& w : ann.layers) {
    SpikingLSTMCell cell{w, {}, options.plan, a};
    const Eigen::Index h = w.hidden();
    for (int k = 0; k < kUnitCount; ++k) {
      const Unit u = static_cast<Unit>(k);
      if (!options.plan.spiking(u)) continue;
      if (is_tanh_unit(u))
        cell.params[k] = LIFGateParams::tanh(h, a.v_tanh_pos, a.v_tanh_neg, 0.0,
                                             options.shift ? a.v_tanh_pos / 2 : 0.0, 1.0,
                                             options.surrogate_gamma);
      else
        cell.params[k] = LIFGateParams::sigmoid(h, a.v_sig, a.v_sig / 2,
                                                options.shift ? a.v_sig / 2 : 0.0, 1.0,
                                                options.surrogate_gamma);
    }
    snn.layers.push_back(std::move(cell));
  }
  snn.validate();
  return snn;
}

double ConversionErrorReport::mean() const {
  double s = 0, n = 0;
  for (const auto& r : rows) {
    s += r.mean_abs_error * static_cast<double>(r.samples);
    n += static_cast<double>(r.samples);
  }
  return n > 0 ? s / n : 0.0;
}

nlohmann::json ConversionErrorReport::to_json() const {
  nlohmann::json j;
  j["time_steps"] = time_steps;
  j["mean_abs_error"] = mean();
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"layer", r.layer},
                         {"unit", std::string(to_string(r.unit))},
                         {"mean_abs_error", r.mean_abs_error},
                         {"samples", r.samples}});
  return j;
}

void ConversionErrorReport::write_csv(std::ostream& out) const {
  out << "layer,unit,mean_abs_error,samples\n";
  for (const auto& r : rows)
    out << r.layer << ',' << to_string(r.unit) << ',' << r.mean_abs_error << ',' << r.samples << '\n';
}

ConversionErrorReport conversion_error_report(const AnnModel& ann, const SnnModel& snn,
                                              const std::vector<Eigen::MatrixXd>& probes,
                                              int time_steps) {
  if (probes.empty()) throw ValidationError("conversion error report needs at least one probe");
  if (ann.layers.size() != snn.layers.size()) throw ValidationError("models disagree in layer count");
  for (std::size_t l = 0; l < ann.layers.size(); ++l)
    if (ann.layers[l].input() != snn.layers[l].input() || ann.layers[l].hidden() != snn.layers[l].hidden())
      throw ValidationError("models disagree in the shape of layer " + std::to_string(l));
  const Eigen::Index n_el = probes.front().rows();
  const Eigen::Index b = static_cast<Eigen::Index>(probes.size());
  std::vector<Eigen::MatrixXd> frames;
  for (Eigen::Index n = 0; n < n_el; ++n) {
    Eigen::MatrixXd f(ann.input_dim(), b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const auto& p = probes[static_cast<std::size_t>(j)];
      if (p.rows() != n_el || p.cols() != ann.input_dim())
        throw ValidationError("probe " + std::to_string(j) + " has the wrong shape");
      f.col(j) = p.row(n).transpose();
    }
    frames.push_back(std::move(f));
  }
  const InputStream stream(frames, n_el, time_steps, false);
  detail::AnnTape at;
  detail::ann_forward_batch(ann, stream, &at);
  detail::SnnTape st;
  detail::snn_forward_batch(snn, stream, time_steps, SpikeMode::heaviside, &st);

  ConversionErrorReport rep;
  rep.time_steps = time_steps;
  for (std::size_t l = 0; l < ann.layers.size(); ++l) {
    for (int k = 0; k < kUnitCount; ++k) {
      double err = 0;
      std::int64_t count = 0;
      for (Eigen::Index n = 0; n < n_el; ++n) {
        const auto& a = at.layers[l][static_cast<std::size_t>(n)];
        const Eigen::MatrixXd& target = k == index(Unit::c_tanh) ? a.tc : a.gate[k];
        Eigen::MatrixXd rate = Eigen::MatrixXd::Zero(target.rows(), target.cols());
        for (int t = 0; t < time_steps; ++t) {
          const auto& r = st.layers[l][static_cast<std::size_t>(n * time_steps + t)];
          rate += k == index(Unit::c_tanh) ? r.s_c : r.gate[k];
        }
        rate /= static_cast<double>(time_steps);
        err += (rate - target).cwiseAbs().sum();
        count += target.size();
      }
      rep.rows.push_back({static_cast<int>(l), static_cast<Unit>(k), count ? err / static_cast<double>(count) : 0.0, count});
    }
  }
  return rep;
}

}  // namespace slstm
