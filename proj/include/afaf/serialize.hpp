#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "afaf/allocation.hpp"
#include "afaf/network.hpp"
#include "afaf/runner.hpp"

namespace afaf {

using json = nlohmann::ordered_json;

// shortest round-trip decimal form of a double
std::string fmt_double(double v);

json plan_to_json(const AllocationPlan& plan);

// Deterministic given the record's content; wall_time_seconds is the only
// field that varies between identical runs.
json record_to_json(const RunRecord& record);
RunRecord record_from_json(const json& j);
RunRecord load_record(const std::string& path);

// rows = after-task index, columns = task id; blank above the diagonal
std::string matrix_to_csv(const AccuracyMatrix& m);
AccuracyMatrix matrix_from_csv(const std::string& csv);

// one {epoch, loss, train-acc, drop-grow, shortfall} object per line
std::string train_log_jsonl(const std::vector<TrainLog>& task_logs);

// header written when absent; BWT blank when undefined
void append_metrics_csv(const std::string& path, const RunRecord& record);

// Portable binary container: magic "AFSN", version, layer specs, output unit
// table, then per-task edge lists (layer, src, tgt, float64 weights,
// little-endian throughout).
void save_snapshot(const std::string& path, const NetworkState& net);
NetworkState load_snapshot(const std::string& path);

}  // namespace afaf
