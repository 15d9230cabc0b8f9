#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "slstm/checkpoint.hpp"
#include "slstm/config.hpp"
#include "slstm/convert.hpp"
#include "slstm/errors.hpp"
#include "slstm/manifest.hpp"
#include "slstm/oracles/oracles.hpp"
#include "slstm/pipeline.hpp"

namespace slstm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool on_off(const std::string& flag, const std::string& v) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw ValidationError(flag + ": expected on|off, got '" + v + "'");
}

std::string prepare_dir(const std::string& dir) {
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const std::string& path, const CommonArgs& c, const std::string& command, const json& config,
                    const std::vector<std::string>& data_files, const std::vector<std::string>& outputs,
                    const json& results) {
  json m = make_manifest(command, config, data_files, outputs);
  m["argv"] = c.argv;
  json hashes = json::object();
  for (const auto& o : outputs)
    if (fs::exists(o)) hashes[o] = git_blob_sha1(o);
  m["output_sha1"] = hashes;
  m["results"] = results;
  write_json(path, m);
}

const SequenceSet& pick_split(const Dataset& ds, const std::string& split) {
  if (split == "test") return ds.test;
  if (split == "validation") return ds.validation;
  if (split == "train") return ds.train;
  throw ValidationError("--split: expected train|validation|test, got '" + split + "'");
}

void apply_common(const CommonArgs& c, RunConfig& cfg) {
  if (c.workers > 0) cfg.train.workers = c.workers;
  cfg.train.verbose = c.verbose;
}

json eval_json(const EvalResult& r) {
  return {{"accuracy", r.accuracy}, {"loss", r.loss}, {"samples", r.samples}};
}

}  // namespace

int train_ann(const CommonArgs& c, const TrainAnnArgs& a) {
  RunConfig cfg = load_run_config(a.config, "ann");
  if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
  apply_common(c, cfg);
  const Dataset ds = load_dataset(cfg.data);
  const std::string dir = prepare_dir(cfg.output_dir);
  cfg.train.checkpoint_path = dir + "/model.slstm";
  cfg.train.metrics_path = dir + "/metrics.csv";

  const AnnModel init = make_ann(cfg.model, ds.train.features, ds.train.classes);
  const auto fit_result = fit(init, ds.train, ds.validation, cfg.train);
  json results = {{"best_epoch", fit_result.best_epoch}, {"best_selection_accuracy", fit_result.best_accuracy}};
  if (!ds.test.empty()) results["test"] = eval_json(evaluate(fit_result.model, ds.test, cfg.train.workers));
  write_manifest(dir + "/manifest.json", c, "train-ann", cfg.source, ds.files,
                 {cfg.train.checkpoint_path, cfg.train.metrics_path}, results);
  std::cout << results.dump() << '\n';
  return 0;
}

int convert(const CommonArgs& c, const ConvertArgs& a) {
  if (a.time_steps < 1) throw ValidationError("--time-steps: must be >= 1");
  const AnnModel ann = load_ann(a.checkpoint);
  ConvertOptions o;
  o.time_steps = a.time_steps;
  o.shift = on_off("--shift", a.shift);
  const Gate analog = parse_gate(a.analog_gate);
  if (analog != Gate::i && analog != Gate::g) throw ValidationError("--analog-gate: expected i or g");
  o.plan = ConversionPlan::with_analog(analog);
  o.encoding = parse_encoding(a.encoding);
  o.surrogate_gamma = a.gamma;
  const SnnModel snn = slstm::convert(ann, o);
  if (const fs::path parent = fs::path(a.out).parent_path(); !parent.empty()) fs::create_directories(parent);
  save_checkpoint(a.out, snn);

  json results = {{"time_steps", o.time_steps}, {"shift", o.shift}, {"analog_gate", a.analog_gate},
                  {"encoding", a.encoding}};
  std::vector<std::string> outputs{a.out};
  std::vector<std::string> files{a.checkpoint};
  if (!a.probe_config.empty()) {
    const RunConfig cfg = load_run_config(a.probe_config, "snn");
    const Dataset ds = load_dataset(cfg.data);
    const SequenceSet& src = ds.validation.empty() ? ds.test : ds.validation;
    std::vector<Eigen::MatrixXd> probes;
    for (std::size_t i = 0; i < std::min<std::size_t>(64, src.size()); ++i) probes.push_back(src.sample(i));
    if (probes.empty()) throw ValidationError("--probe-config: data has no validation or test samples");
    const auto rep = conversion_error_report(ann, snn, probes, o.time_steps);
    results["conversion_error"] = rep.to_json();
    if (!a.error_csv.empty()) {
      std::ofstream csv(a.error_csv);
      if (!csv) throw Error("cannot open " + a.error_csv);
      rep.write_csv(csv);
      outputs.push_back(a.error_csv);
    }
    files.insert(files.end(), ds.files.begin(), ds.files.end());
  }
  write_manifest(a.out + ".manifest.json", c, "convert", results, files, outputs, results);
  std::cout << results.dump() << '\n';
  return 0;
}

int train_snn(const CommonArgs& c, const TrainSnnArgs& a) {
  RunConfig cfg = load_run_config(a.config, "snn");
  if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
  apply_common(c, cfg);
  if (!a.train_threshold.empty()) cfg.train.mask.threshold = on_off("--train-threshold", a.train_threshold);
  if (!a.train_leak.empty()) cfg.train.mask.leak = on_off("--train-leak", a.train_leak);
  if (!a.train_init.empty()) cfg.train.mask.mem_init = on_off("--train-init", a.train_init);
  std::string init = a.init.empty() ? cfg.snn.init_checkpoint : a.init;
  if (a.from_scratch) init.clear();
  if (!init.empty() && !fs::exists(init)) throw ValidationError("--init: no such file " + init);

  const Dataset ds = load_dataset(cfg.data);
  const std::string dir = prepare_dir(cfg.output_dir);
  cfg.train.checkpoint_path = dir + "/model.slstm";
  cfg.train.metrics_path = dir + "/metrics.csv";

  SnnModel model;
  std::string start;
  std::vector<std::string> files = ds.files;
  if (init.empty()) {
    start = "random";
    model = slstm::convert(make_ann(cfg.model, ds.train.features, ds.train.classes), convert_options(cfg.snn));
  } else {
    files.push_back(init);
    Checkpoint ck = load_checkpoint(init);
    if (ck.kind == ModelKind::ann) {
      start = "converted";
      model = slstm::convert(*ck.ann, convert_options(cfg.snn));
    } else {
      start = "snn_checkpoint";
      model = std::move(*ck.snn);
      if (model.time_steps != cfg.snn.time_steps)
        throw ValidationError("snn.time_steps: checkpoint runs at T=" + std::to_string(model.time_steps));
    }
  }
  json results = {{"start", start}};
  results["initial_validation"] = eval_json(evaluate(model, ds.validation, cfg.train.seed, cfg.train.workers));
  if (!ds.test.empty())
    results["initial_test"] = eval_json(evaluate(model, ds.test, cfg.train.seed, cfg.train.workers));
  const auto fit_result = fit(model, ds.train, ds.validation, cfg.train);
  results["best_epoch"] = fit_result.best_epoch;
  results["best_selection_accuracy"] = fit_result.best_accuracy;
  if (!ds.test.empty()) {
    const EvalResult ev = evaluate(fit_result.model, ds.test, cfg.train.seed, cfg.train.workers);
    results["test"] = eval_json(ev);
    results["test"]["spike_rate"] = ev.stats.mean_rate(fit_result.model);
  }
  json config = cfg.source;
  config["effective_mask"] = {{"weights", cfg.train.mask.weights}, {"threshold", cfg.train.mask.threshold},
                              {"leak", cfg.train.mask.leak}, {"mem_init", cfg.train.mask.mem_init},
                              {"step_bias", cfg.train.mask.step_bias}};
  write_manifest(dir + "/manifest.json", c, "train-snn", config, files,
                 {cfg.train.checkpoint_path, cfg.train.metrics_path}, results);
  std::cout << results.dump() << '\n';
  return 0;
}

int eval(const CommonArgs& c, const EvalArgs& a) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const RunConfig cfg = load_run_config(a.config, "snn");
  const Dataset ds = load_dataset(cfg.data);
  const SequenceSet& set = pick_split(ds, a.split);
  if (set.empty()) throw ValidationError("--split: the " + a.split + " split is empty");
  const int workers = c.workers > 0 ? c.workers : cfg.train.workers;
  json out = {{"checkpoint", a.checkpoint}, {"split", a.split}};
  if (ck.kind == ModelKind::ann) {
    out["kind"] = "ann";
    out.update(eval_json(evaluate(*ck.ann, set, workers)));
  } else {
    const SnnModel& m = *ck.snn;
    const EvalResult ev = evaluate(m, set, a.seed, workers);
    out["kind"] = "snn";
    out.update(eval_json(ev));
    out["spike_rate"] = ev.stats.mean_rate(m);
    const OpCountReport ops = count_ops_snn(ev.stats, m, set.elements, m.time_steps, m.encoding);
    audit_multipliers(ops, m.encoding);
    out["multiplier_audit"] = "pass";
    if (!a.sparsity_csv.empty()) {
      std::ofstream csv(a.sparsity_csv);
      if (!csv) throw Error("cannot open " + a.sparsity_csv);
      write_sparsity_csv(csv, ev.stats, m);
    }
  }
  if (!a.json.empty()) write_json(a.json, out);
  std::cout << out.dump() << '\n';
  return 0;
}

int pipeline_sim(const CommonArgs&, const PipelineArgs& a) {
  if (a.n < 1 || a.t < 1) throw ValidationError("--n and --t must be >= 1");
  SnnModel model;
  if (!a.checkpoint.empty()) {
    model = load_snn(a.checkpoint);
  } else {
    if (a.features < 1 || a.hidden < 1) throw ValidationError("--features and --hidden must be >= 1");
    ModelConfig mc;
    mc.hidden = a.hidden;
    mc.init_seed = a.seed;
    ConvertOptions o;
    o.time_steps = a.t;
    model = slstm::convert(make_ann(mc, a.features, 10), o);
  }
  model.time_steps = a.t;
  std::mt19937_64 rng(mix_seed(a.seed, 0x5E0));
  Eigen::MatrixXd seq(a.n, model.input_dim());
  for (Eigen::Index j = 0; j < seq.cols(); ++j)
    for (Eigen::Index i = 0; i < seq.rows(); ++i) seq(i, j) = uniform01(rng);

  const SnnRunOptions run{a.t, model.encoding, a.seed};
  const PipelineResult res = simulate_pipelined(model, seq, run);
  const PipelineSchedule sched = build_schedule(a.n, a.t);
  const LatencyModel lm = a.latency_model.empty() ? LatencyModel{} : [&] {
    std::ifstream in(a.latency_model);
    if (!in) throw ValidationError("--latency-model: cannot open " + a.latency_model);
    return LatencyModel::from_json(json::parse(in));
  }();
  const std::int64_t nt = a.n * a.t;
  const LatencyReport modes[] = {
      latency_report(sched, per_block(res.ops, nt), lm, ExecMode::proposed),
      latency_report(sched, per_block(count_ops_ann(nonspiking_twin(model), a.n), a.n), lm, ExecMode::nonspiking),
      latency_report(sched, per_block(count_ops_priorwork(model, a.n, a.t), nt), lm, ExecMode::priorwork),
  };
  json out = {{"elements", a.n}, {"time_steps", a.t}, {"max_concurrency", sched.max_concurrency()}};
  out["modes"] = json::array();
  for (const auto& m : modes) out["modes"].push_back(m.to_json());
  if (!a.trace_csv.empty()) {
    std::ofstream csv(a.trace_csv);
    if (!csv) throw Error("cannot open " + a.trace_csv);
    write_trace_csv(csv, res.trace);
  }
  if (!a.latency_json.empty()) write_json(a.latency_json, out);
  for (const auto& m : modes) std::cout << to_string(m.mode) << " ticks " << m.ticks << " latency " << m.latency << '\n';
  return 0;
}

int energy_report(const CommonArgs& c, const EnergyArgs& a) {
  const SnnModel m = load_snn(a.checkpoint);
  const RunConfig cfg = load_run_config(a.config, "snn");
  const Dataset ds = load_dataset(cfg.data);
  SequenceSet set = pick_split(ds, a.split);
  if (a.samples) set = take(set, a.samples, mix_seed(a.seed, 0xE));
  if (set.empty()) throw ValidationError("--split: the " + a.split + " split is empty");
  EnergyModel em;
  if (!a.energy_model.empty()) {
    std::ifstream in(a.energy_model);
    if (!in) throw ValidationError("--energy-model: cannot open " + a.energy_model);
    em = EnergyModel::from_json(json::parse(in));
  }
  const int workers = c.workers > 0 ? c.workers : cfg.train.workers;
  const EvalResult ev = evaluate(m, set, a.seed, workers);
  const OpCountReport snn_ops = count_ops_snn(ev.stats, m, set.elements, m.time_steps, m.encoding);
  audit_multipliers(snn_ops, m.encoding);
  const OpCountReport one = count_ops_ann(nonspiking_twin(m), set.elements);
  OpCountReport ann_ops = one;
  for (std::size_t i = 1; i < set.size(); ++i) ann_ops += one;

  const EnergyBreakdown e_snn = estimate_energy(snn_ops, em);
  const EnergyBreakdown e_ann = estimate_energy(ann_ops, em);
  json out = {{"samples", set.size()}, {"accuracy", ev.accuracy}, {"spike_rate", ev.stats.mean_rate(m)}};
  out["spiking"] = {{"ops", snn_ops.to_json()}, {"energy", e_snn.to_json()}};
  out["nonspiking"] = {{"ops", ann_ops.to_json()}, {"energy", e_ann.to_json()}};
  out["digital_ratio_nonspiking_over_spiking"] = e_ann.digital_total / e_snn.digital_total;
  if (!a.csv.empty()) {
    std::ofstream csv(a.csv);
    if (!csv) throw Error("cannot open " + a.csv);
    write_energy_csv(csv, {{"nonspiking", e_ann}, {"spiking", e_snn}});
  }
  if (!a.json.empty()) write_json(a.json, out);
  std::cout << "digital energy ratio (non-spiking / spiking) " << out["digital_ratio_nonspiking_over_spiking"].get<double>()
            << " at spike rate " << out["spike_rate"].get<double>() << '\n';
  return 0;
}

int verify(const CommonArgs&, const VerifyArgs& a) {
  using namespace slstm::oracles;
  std::vector<SuiteResult> suites;
  suites.push_back(closed_form_suite());
  suites.push_back(shift_optimality_suite());
  suites.push_back(gradient_suite());
  suites.push_back(pipeline_suite(a.pipeline_cases));
  suites.push_back(audit_suite());
  json report = {{"passed", true}, {"suites", json::array()}};
  json failures = json::array();
  for (const auto& s : suites) {
    report["suites"].push_back(s.to_json());
    if (!s.passed()) report["passed"] = false;
    for (const auto& ch : s.checks) {
      const char* tag = ch.passed ? "PASS" : ch.gating ? "FAIL" : "NOTE";
      std::cout << tag << "  " << s.name << '/' << ch.name << "  " << ch.detail << '\n';
      if (!ch.passed && ch.gating) failures.push_back({{"suite", s.name}, {"check", ch.name}, {"detail", ch.detail}});
    }
  }
  if (!a.json.empty()) write_json(a.json, report);
  if (!failures.empty()) {
    std::cerr << json{{"error", "verify"}, {"failures", failures}}.dump() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace slstm::cli
