#pragma once

#include <string>
#include <vector>

#include "afaf/allocation.hpp"
#include "afaf/data.hpp"
#include "afaf/ledger.hpp"
#include "afaf/metrics.hpp"
#include "afaf/network.hpp"
#include "afaf/trainer.hpp"

namespace afaf {

enum class AllocationMode { Afaf, Spacenet };

struct MethodSpec {
    AllocationMode mode = AllocationMode::Afaf;
    CandidateStrategy strategy = CandidateStrategy::Highest;
    // ablations (afaf mode only)
    bool without_orthogonal_output = false;   // fix only the dense-layer fraction at L-1
    bool with_candidates_in_last_layer = false;  // candidates feed output edges too
    bool reuse_all = false;                   // l_reuse = L-1

    void validate() const;
    std::string name() const;
};

struct RunRecord {
    std::string method;
    std::string benchmark;
    std::uint64_t seed = 0;
    int reuse_start_task = 1;
    AccuracyMatrix class_il;
    AccuracyMatrix task_il;
    std::vector<double> la_entries;           // a_{i,i}, class-IL
    std::int64_t params = 0;
    CostReport cost;
    std::vector<TrainLog> task_logs;
    bool failed = false;
    int failed_task = 0;                      // 1-based offending task when failed
    std::string failure;
    double wall_time_seconds = 0.0;
    std::string notes;                        // e.g. dataset-split provenance
    std::string snapshot;                     // path of the persisted network, if any
};

// Hook for tests; sees the engine state after each trained task.
struct RunObserver {
    virtual ~RunObserver() = default;
    virtual void after_task(int task_id, const NetworkState& net, const NeuronLedger& ledger,
                            const AllocationPlan& plan) = 0;
};

struct RunOutput {
    RunRecord record;
    NetworkState net;
    NeuronLedger ledger;
};

// Prediction = argmax over all seen output units; no task label consumed.
// Returns one accuracy per entry of seen_tasks.
std::vector<double> evaluate_class_il(const NetworkState& net,
                                      const std::vector<const TaskData*>& seen_tasks,
                                      Exec exec = Exec::Serial);

// Argmax restricted to the labeled task's output units.
std::vector<double> evaluate_task_il(const NetworkState& net,
                                     const std::vector<const TaskData*>& seen_tasks,
                                     const std::vector<int>& task_labels,
                                     Exec exec = Exec::Serial);

// allocate -> train -> fix -> evaluate over the whole sequence. Task t reuses
// past components only when mode is afaf and t >= benchmark.reuse_start_task;
// otherwise allocation draws free neurons in every layer. The trainer sees only
// task t's training data. Capacity exhaustion yields a partial record with a
// failure marker instead of throwing.
RunOutput run_sequence(const Architecture& base_arch, const TaskSequence& benchmark,
                       const MethodSpec& method, const AllocationConfig& alloc_config,
                       const TrainConfig& train_config, std::uint64_t seed,
                       RunObserver* observer = nullptr);

}  // namespace afaf
