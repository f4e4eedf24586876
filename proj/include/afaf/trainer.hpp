#pragma once

#include <vector>

#include "afaf/allocation.hpp"
#include "afaf/ledger.hpp"
#include "afaf/network.hpp"
#include "afaf/rng.hpp"

namespace afaf {

struct TrainConfig {
    int epochs = 40;
    int batch_size = 64;
    double learning_rate = 0.1;
    double zeta = 0.3;          // fraction of the task's edges rearranged per cycle
    int cycle_period = 1;       // epochs between drop-and-grow events
    bool loss_over_all_seen = false;
    Exec exec = Exec::Serial;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("batch size must be >= 1");
        if (learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
        if (zeta < 0.0 || zeta >= 1.0) throw ConfigError("zeta must be in [0,1)");
        if (cycle_period < 1) throw ConfigError("cycle period must be >= 1");
    }
};

// |gradient| accumulated per edge (block scalars summed) since the last reset.
class EdgeScoreAccumulator {
public:
    void reset(const NetworkState& net);
    void accumulate(const NetworkState& net, const Gradients& grads);
    long steps() const { return steps_; }
    // mean |gradient| per edge; throws StalenessError on an empty window
    std::vector<std::vector<double>> mean_scores() const;

private:
    std::vector<std::vector<double>> abs_sum_;
    long steps_ = 0;
};

struct ImportanceReport {
    std::vector<std::vector<double>> edge_scores;     // [edge layer][edge]
    std::vector<std::vector<double>> neuron_scores;   // [neuron layer][neuron], sum of outgoing
};

ImportanceReport make_importance_report(const NetworkState& net, int task_id,
                                        const std::vector<std::vector<double>>& edge_scores);

struct DropGrowResult {
    int dropped = 0;
    int grown = 0;
    int shortfall = 0;
};

// Drops the floor(zeta * |edges|) lowest-score edges of the task and grows the
// same number at the highest neuron-score pairs inside the plan's allowed
// source/target sets. Grown edges start at zero weight.
DropGrowResult drop_and_grow(NetworkState& net, int task_id,
                             const std::vector<std::vector<double>>& edge_scores, double zeta,
                             const std::vector<std::vector<double>>& neuron_scores,
                             const AllocationPlan& plan, Rng& rng);

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double train_accuracy = 0.0;
    int dropped = 0, grown = 0, shortfall = 0;
};

struct TrainLog {
    std::vector<EpochLog> epochs;
    int total_shortfall = 0;
};

TrainLog train_task(NetworkState& net, const AllocationPlan& plan, const NeuronLedger& ledger,
                    const std::vector<ClassDatasetView>& task_data, const TrainConfig& config,
                    Rng& rng, ImportanceReport* importance_out = nullptr);

// Marks the plan's neurons as used by the task (allocation commit).
void commit_plan(NeuronLedger& ledger, const AllocationPlan& plan);

// Per layer, fixes the top fix-fraction of h_l^alloc by neuron importance;
// output-adjacent allocation and the task's output units are fixed outright
// unless the plan opts out.
void fix_neurons_after_task(NeuronLedger& ledger, const ImportanceReport& importance,
                            const AllocationPlan& plan, const std::vector<double>& fix_fraction);

}  // namespace afaf
