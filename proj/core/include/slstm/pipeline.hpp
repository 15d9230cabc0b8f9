#pragma once

#include <ostream>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "slstm/energy.hpp"
#include "slstm/lstm.hpp"

namespace slstm {

/// Block (element n, internal step tau) runs at tick n + tau - 1; all 1-based.
struct ScheduleEntry {
  Eigen::Index element;
  int step;
  Eigen::Index tick;
};

struct PipelineSchedule {
  Eigen::Index elements = 0;
  int time_steps = 0;
  std::vector<ScheduleEntry> entries;  // tick-major, elements ascending within a tick

  Eigen::Index ticks() const { return elements + time_steps - 1; }
  static Eigen::Index tick_of(Eigen::Index element, int step) { return element + step - 1; }
  /// Elements active at `tick`: max(1, tick-T+1) .. min(N, tick).
  std::pair<Eigen::Index, Eigen::Index> active_range(Eigen::Index tick) const;
  Eigen::Index active_count(Eigen::Index tick) const;
  Eigen::Index max_concurrency() const;
  /// Predecessors of (n, tau): (n, tau-1) and (n-1, tau) when they exist.
  std::vector<ScheduleEntry> dependencies(Eigen::Index element, int step) const;
};

PipelineSchedule build_schedule(Eigen::Index elements, int time_steps);

struct TickRecord {
  Eigen::Index tick = 0;
  Eigen::Index active_blocks = 0;
  OpTally ops;  // spiking layers only
};

struct PipelineResult {
  Eigen::VectorXd logits;
  std::vector<TickRecord> trace;
  SpikeStats stats;
  OpCountReport ops;
};

/// Executes the cell steps tick by tick in schedule order, buffering the
/// cross-element h/c streams. Throws Error on a dependency violation.
PipelineResult simulate_pipelined(const SnnModel& model, const Eigen::MatrixXd& sequence,
                                  const SnnRunOptions& options);

void write_trace_csv(std::ostream& out, const std::vector<TickRecord>& trace);

/// Abstract per-operation latencies (cycles) and per-block parallelism.
struct LatencyModel {
  double mac = 1, multiply = 1, accumulate = 1, compare = 1, activation = 1;
  std::int64_t width = 1;  // parallel units per op kind inside a block
  std::int64_t blocks = 0; // physical blocks; 0 = one per concurrently active element
  std::int64_t stages = 1; // elements one physical block can hold when internally pipelined

  void validate() const;
  static LatencyModel from_json(const nlohmann::json& j);
};

enum class ExecMode : std::uint8_t { proposed, nonspiking, priorwork };
std::string_view to_string(ExecMode m);

struct LatencyReport {
  ExecMode mode = ExecMode::proposed;
  Eigen::Index ticks = 0;
  std::int64_t stretch = 1;
  double block_cost = 0;
  double latency = 0;

  nlohmann::json to_json() const;
};

/// Ceil-averaged op tally of one block invocation.
OpTally per_block(const OpCountReport& report, std::int64_t invocations);

/// ticks(mode) x stretch x block_cost, where ticks are N+T-1 (proposed), N
/// (nonspiking) or T*N (priorwork), block_cost sums ceil(count/width) x latency
/// over op kinds, and stretch = ceil(min(N,T) / (blocks*stages)) for the
/// proposed mode when the block count is limited.
LatencyReport latency_report(const PipelineSchedule& schedule, const OpTally& block_ops,
                             const LatencyModel& lm, ExecMode mode);

}  // namespace slstm
