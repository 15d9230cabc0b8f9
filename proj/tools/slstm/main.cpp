#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "slstm/errors.hpp"

namespace {

int fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace slstm::cli;
  CLI::App app{"Spiking LSTM toolkit: train, convert, fine-tune, simulate and cost spiking LSTMs.\n"
               "MNIST configs read $SLSTM_DATA_ROOT/mnist unless data.mnist_dir is set.\n"
               "Exit codes: 0 success, 1 runtime failure, 2 config or validation failure."};
  app.require_subcommand(1);
  CommonArgs common;
  common.argv.assign(argv, argv + argc);
  app.add_option("--workers", common.workers, "Worker threads (overrides train.workers; results do not depend on it)")
      ->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", common.verbose, "Per-epoch progress on stderr");

  TrainAnnArgs ta;
  auto* c_ta = app.add_subcommand("train-ann", "Train the hard-activation LSTM");
  c_ta->add_option("config", ta.config, "Run config (JSON)")->required();
  c_ta->add_option("-o,--output-dir", ta.output_dir, "Overrides output_dir from the config");

  ConvertArgs cv;
  auto* c_cv = app.add_subcommand("convert", "Convert an ANN checkpoint into a spiking checkpoint");
  c_cv->add_option("checkpoint", cv.checkpoint, "ANN checkpoint")->required();
  c_cv->add_option("-o,--out", cv.out, "Output SNN checkpoint")->required();
  c_cv->add_option("--time-steps", cv.time_steps, "Internal steps per element")->capture_default_str();
  c_cv->add_option("--shift", cv.shift, "Half-threshold initial membranes")->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  c_cv->add_option("--analog-gate", cv.analog_gate, "Gate kept analog")->check(CLI::IsMember({"i", "g"}))->capture_default_str();
  c_cv->add_option("--encoding", cv.encoding, "Input encoding")->check(CLI::IsMember({"direct", "poisson"}))->capture_default_str();
  c_cv->add_option("--gamma", cv.gamma, "Surrogate gradient scale")->capture_default_str();
  c_cv->add_option("--probe-config", cv.probe_config, "Run config whose data supplies probes for a conversion-error report");
  c_cv->add_option("--error-csv", cv.error_csv, "Per-gate conversion error CSV (needs --probe-config)");

  TrainSnnArgs ts;
  auto* c_ts = app.add_subcommand("train-snn", "Fine-tune (or train from scratch) a spiking LSTM");
  c_ts->add_option("config", ts.config, "Run config (JSON)")->required();
  c_ts->add_option("-o,--output-dir", ts.output_dir, "Overrides output_dir from the config");
  c_ts->add_option("--init", ts.init, "ANN checkpoint to convert or SNN checkpoint to continue (overrides snn.init_checkpoint)");
  c_ts->add_flag("--from-scratch", ts.from_scratch, "Ignore any init checkpoint and start from random weights");
  for (auto [flag, dst, what] : {std::tuple{"--train-threshold", &ts.train_threshold, "thresholds"},
                                 std::tuple{"--train-leak", &ts.train_leak, "leaks"},
                                 std::tuple{"--train-init", &ts.train_init, "initial membranes"}})
    c_ts->add_option(flag, *dst, std::string("Train the ") + what + " (overrides train.mask)")
        ->check(CLI::IsMember({"on", "off"}));

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Accuracy, spike rate and multiplier audit of a checkpoint");
  c_ev->add_option("checkpoint", ev.checkpoint, "ANN or SNN checkpoint")->required();
  c_ev->add_option("--config", ev.config, "Run config providing the data section")->required();
  c_ev->add_option("--split", ev.split, "train|validation|test")->capture_default_str();
  c_ev->add_option("--seed", ev.seed, "Poisson encoding seed")->capture_default_str();
  c_ev->add_option("--sparsity-csv", ev.sparsity_csv, "Per-neuron firing-rate histogram CSV");
  c_ev->add_option("--json", ev.json, "Write the report here as well");

  PipelineArgs ps;
  auto* c_ps = app.add_subcommand("pipeline-sim", "Run the diagonal pipeline schedule and report latencies");
  c_ps->add_option("--n", ps.n, "Sequence elements")->capture_default_str();
  c_ps->add_option("--t", ps.t, "Internal steps per element")->capture_default_str();
  c_ps->add_option("--checkpoint", ps.checkpoint, "SNN checkpoint (default: a random converted model)");
  c_ps->add_option("--features", ps.features, "Input width of the random model")->capture_default_str();
  c_ps->add_option("--hidden", ps.hidden, "Hidden size of the random model")->capture_default_str();
  c_ps->add_option("--seed", ps.seed, "Seed for the random model and input")->capture_default_str();
  c_ps->add_option("--latency-model", ps.latency_model, "Per-op latencies and block parallelism (JSON)");
  c_ps->add_option("--trace", ps.trace_csv, "Per-tick trace CSV");
  c_ps->add_option("--latency-json", ps.latency_json, "Latency report for the three modes");

  EnergyArgs en;
  auto* c_en = app.add_subcommand("energy-report", "Digital and neuromorphic energy of a spiking checkpoint");
  c_en->add_option("checkpoint", en.checkpoint, "SNN checkpoint")->required();
  c_en->add_option("--config", en.config, "Run config providing the data section")->required();
  c_en->add_option("--energy-model", en.energy_model, "Per-op energies and platforms (JSON)");
  c_en->add_option("--samples", en.samples, "Subsample the split (0 = all)")->capture_default_str();
  c_en->add_option("--split", en.split, "train|validation|test")->capture_default_str();
  c_en->add_option("--seed", en.seed, "Poisson and subsampling seed")->capture_default_str();
  c_en->add_option("--json", en.json, "Full report");
  c_en->add_option("--csv", en.csv, "Energy breakdown CSV");

  VerifyArgs vf;
  auto* c_vf = app.add_subcommand("verify", "Run every oracle suite; exit 1 on any failure");
  c_vf->add_option("--json", vf.json, "Full suite report");
  c_vf->add_option("--pipeline-cases", vf.pipeline_cases, "Randomised pipeline cases")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*c_ta) return train_ann(common, ta);
    if (*c_cv) return convert(common, cv);
    if (*c_ts) return train_snn(common, ts);
    if (*c_ev) return eval(common, ev);
    if (*c_ps) return pipeline_sim(common, ps);
    if (*c_en) return energy_report(common, en);
    if (*c_vf) return verify(common, vf);
  } catch (const slstm::ValidationError& e) {
    return fail(2, "validation", e.what());
  } catch (const slstm::DomainError& e) {
    return fail(2, "domain", e.what());
  } catch (const slstm::FormatError& e) {
    return fail(2, "format", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(2, "json", e.what());
  } catch (const slstm::MultiplierAuditError& e) {
    return fail(1, "multiplier_audit", e.what());
  } catch (const std::exception& e) {
    return fail(1, "runtime", e.what());
  }
  return 1;
}
