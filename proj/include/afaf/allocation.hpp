#pragma once

#include <vector>

#include "afaf/ledger.hpp"
#include "afaf/network.hpp"
#include "afaf/rng.hpp"

namespace afaf {

enum class CandidateStrategy { Highest, Random, Lowest };

// Layer indices follow the 1-based convention used across the project's
// configs: layer 1 is the input, layer L the output. l_reuse is the first
// layer a task allocates new connections from, valid in [2, L-2].
struct AllocationConfig {
    int l_reuse = 2;
    int reuse_start_task = 1;                 // first task id that reuses (1-based)
    double candidate_fraction = 0.3;          // of |h_l^alloc|; remainder is free
    CandidateStrategy strategy = CandidateStrategy::Highest;
    std::vector<double> epsilon;              // per edge layer, density in (0,1]
    std::vector<double> alloc_fraction;       // per neuron layer, fraction of width
    std::vector<double> fix_fraction;         // per neuron layer, fraction of alloc fixed

    void validate(const Architecture& arch) const;
};

// round-half-up, floor-clamped at 1 for nonzero fractions
int fraction_count(double fraction, int total);

struct ClassDatasetView {
    int class_id = 0;
    const std::vector<std::vector<double>>* samples = nullptr;
};

struct LayerAllocation {
    std::vector<int> free;                      // S_l^Free
    std::vector<std::vector<int>> candidates;   // R_l^c per class
    std::vector<int> alloc_union;               // all neurons participating at this layer
};

struct AllocationPlan {
    int task_id = 0;
    int first_edge_layer = 0;                   // 0-based; edges exist in [first, L-2]
    bool fix_all_output_adjacent = true;
    std::vector<LayerAllocation> layers;        // size L
    std::vector<SparseEdgeSet> edges;           // per edge layer, empty below first
    std::vector<int> new_output_units;

    // Legal (source set, target set) products per edge layer per class;
    // the growth phase of drop-and-grow is confined to these.
    struct PairSet {
        std::vector<int> src, tgt;
    };
    std::vector<std::vector<PairSet>> grow_sites;  // [edge layer][class]

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& s : edges) n += s.count();
        return n;
    }
};

// Eq. 1: mean post-activation per neuron over one class's data.
std::vector<std::vector<double>> average_class_activation(const NetworkState& network,
                                                          const std::vector<std::vector<double>>& class_data,
                                                          Exec exec = Exec::Serial);

// Eq. 2 (and the Random/Lowest comparison strategies). Ties break toward the
// smaller index.
std::vector<int> select_candidates(const std::vector<double>& scores, int kappa,
                                   CandidateStrategy strategy, Rng& rng);

// Uniform sample of non-fixed neurons, preferring never-used ones.
std::vector<int> select_free_neurons(const NeuronLedger& ledger, int layer, int count, Rng& rng);

// Algorithm "AFAF sub-network allocation": candidates per class from l_reuse,
// shared free sets, Eq. 3 source/target sets, edges sampled at density eps_l.
AllocationPlan build_allocation(const NetworkState& network, const NeuronLedger& ledger,
                                const AllocationConfig& config, int task_id,
                                const std::vector<ClassDatasetView>& task_data,
                                const std::vector<int>& new_output_units, Rng& rng,
                                bool candidates_in_last_layer = false);

// Free-neuron-only allocation in every layer (early tasks and the
// per-layer-allocation comparison arm).
AllocationPlan allocate_spacenet_style(const NetworkState& network, const NeuronLedger& ledger,
                                       const AllocationConfig& config, int task_id,
                                       int num_classes, const std::vector<int>& new_output_units,
                                       Rng& rng);

struct AmbiguityCheckOptions {
    bool require_free_output_sources = true;   // rule (a)
    bool check_l_reuse_range = true;           // rule (c)
};

// Class-ambiguity constraints: (a) output edges originate from free neurons
// only, (b) no edge targets a fixed neuron, (c) l_reuse within [2, L-2],
// (d) output-adjacent allocation marked for post-training fixing.
const AllocationPlan& enforce_ambiguity_constraints(const AllocationPlan& plan,
                                                    const NeuronLedger& ledger,
                                                    const Architecture& arch,
                                                    const AmbiguityCheckOptions& opts = {});

// Uniform-in-[-b, b] weights with b from the allocated fan-in/fan-out.
void init_plan_weights(AllocationPlan& plan, const Architecture& arch, Rng& rng);

}  // namespace afaf
