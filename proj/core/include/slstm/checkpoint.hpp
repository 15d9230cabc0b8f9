#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "slstm/model.hpp"

namespace slstm {

enum class ModelKind : std::uint8_t { ann = 0, snn = 1 };

/// Contents of an SLSTM1 file; exactly one of `ann` / `snn` is set.
struct Checkpoint {
  ModelKind kind = ModelKind::ann;
  std::optional<AnnModel> ann;
  std::optional<SnnModel> snn;
};

// Layout (little-endian): "SLSTM1", u8 kind, u8 encoding, u32 T, f64 v_sig,
// f64 v_tanh_pos, f64 v_tanh_neg, u32 layers, per layer {u32 in, u32 hidden,
// u8 plan flags}, u32 head layers, per head layer {u32 in, u32 out}; then f64
// blocks: per layer wx, wh, b (row-major), per head layer w, b; SNN files then
// hold, per layer and per spiking unit in f, i, g, o, c_tanh order, the vectors
// leak, threshold_pos, [threshold_neg], step_bias, mem_init and f64 gamma.
void write_checkpoint(std::ostream& out, const AnnModel& model);
void write_checkpoint(std::ostream& out, const SnnModel& model);
Checkpoint read_checkpoint(std::istream& in);

/// Writes to `path` through a temporary file and a rename.
void save_checkpoint(const std::string& path, const AnnModel& model);
void save_checkpoint(const std::string& path, const SnnModel& model);
Checkpoint load_checkpoint(const std::string& path);
AnnModel load_ann(const std::string& path);
SnnModel load_snn(const std::string& path);

}  // namespace slstm
