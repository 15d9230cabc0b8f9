#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace slstm::cli {

struct CommonArgs {
  std::vector<std::string> argv;
  int workers = 0;  // 0 = use the config
  bool verbose = false;
};

struct TrainAnnArgs {
  std::string config;
  std::string output_dir;
};

struct ConvertArgs {
  std::string checkpoint;
  std::string out;
  int time_steps = 2;
  std::string shift = "on";
  std::string analog_gate = "i";
  std::string encoding = "direct";
  double gamma = 0.3;
  std::string probe_config;  // optional: data config for a conversion-error report
  std::string error_csv;
};

struct TrainSnnArgs {
  std::string config;
  std::string output_dir;
  std::string init;             // overrides snn.init_checkpoint
  bool from_scratch = false;    // NP mode: ignore any init checkpoint
  std::string train_threshold;  // on|off, empty keeps the config
  std::string train_leak;
  std::string train_init;
};

struct EvalArgs {
  std::string checkpoint;
  std::string config;
  std::string split = "test";
  std::uint64_t seed = 0;
  std::string sparsity_csv;
  std::string json;
};

struct PipelineArgs {
  long n = 5;
  int t = 3;
  std::string checkpoint;
  long features = 8;
  long hidden = 16;
  std::uint64_t seed = 0;
  std::string latency_model;
  std::string trace_csv;
  std::string latency_json;
};

struct EnergyArgs {
  std::string checkpoint;
  std::string config;
  std::string energy_model;
  std::size_t samples = 0;  // 0 = whole split
  std::string split = "test";
  std::uint64_t seed = 0;
  std::string json;
  std::string csv;
};

struct VerifyArgs {
  std::string json;
  int pipeline_cases = 100;
};

int train_ann(const CommonArgs& c, const TrainAnnArgs& a);
int convert(const CommonArgs& c, const ConvertArgs& a);
int train_snn(const CommonArgs& c, const TrainSnnArgs& a);
int eval(const CommonArgs& c, const EvalArgs& a);
int pipeline_sim(const CommonArgs& c, const PipelineArgs& a);
int energy_report(const CommonArgs& c, const EnergyArgs& a);
int verify(const CommonArgs& c, const VerifyArgs& a);

}  // namespace slstm::cli
