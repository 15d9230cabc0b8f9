#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slstm/convert.hpp"
#include "slstm/data.hpp"
#include "slstm/energy.hpp"
#include "slstm/pipeline.hpp"
#include "slstm/train.hpp"

namespace slstm {

inline constexpr int kSchemaVersion = 1;

enum class DataKind : std::uint8_t { mnist, seqf, synthetic };

struct DataConfig {
  DataKind kind = DataKind::synthetic;
  std::string mnist_dir;  // default: $SLSTM_DATA_ROOT/mnist
  int pad_to = 32;
  std::size_t train_limit = 0;  // 0 = all
  std::size_t test_limit = 0;
  double validation_fraction = 0.1;
  std::string seqf_train, seqf_test;
  SyntheticKind synthetic_task = SyntheticKind::planted_pattern;
  std::size_t synthetic_size = 512;
  SyntheticShape synthetic_shape;
  std::uint64_t seed = 1;
};

struct ModelConfig {
  Eigen::Index hidden = 128;
  int layers = 1;
  std::vector<Eigen::Index> head;  // hidden sizes before the class layer
  HardActConfig act;
  std::uint64_t init_seed = 0;
};

struct SnnConfig {
  int time_steps = 2;
  Encoding encoding = Encoding::direct;
  Gate analog_gate = Gate::i;
  bool shift = true;
  double surrogate_gamma = 0.3;
  std::string init_checkpoint;  // ANN or SNN checkpoint; empty = random init (NP)
};

ConvertOptions convert_options(const SnnConfig& s);

struct RunConfig {
  int schema_version = kSchemaVersion;
  DataConfig data;
  ModelConfig model;
  SnnConfig snn;
  TrainConfig train;
  std::string output_dir = "runs/default";
  nlohmann::json source;  // the config as given
};

/// Parses and validates a run configuration. Errors are ValidationError with
/// the offending field path ("train.lr: must be positive"); unknown fields are
/// rejected. `kind` is "ann" or "snn" and selects the learning-rate default.
RunConfig parse_run_config(const nlohmann::json& j, const std::string& kind);
RunConfig load_run_config(const std::string& path, const std::string& kind);

struct Dataset {
  SequenceSet train, validation, test;
  std::vector<std::string> files;  // data files read, for the manifest
};

/// Loads and splits the configured data. Missing files raise ValidationError
/// naming the config field.
Dataset load_dataset(const DataConfig& cfg);

/// Fresh model of the configured shape for the dataset's width and class count.
AnnModel make_ann(const ModelConfig& cfg, Eigen::Index input, int classes);

std::string data_root();

}  // namespace slstm
