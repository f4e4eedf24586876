#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "afaf/layer.hpp"
#include "afaf/rng.hpp"

namespace afaf {

enum class Mode { Train, Eval };
enum class Exec { Serial, Parallel };

// New edges of one task in one edge layer. Weight blocks are stored
// contiguously: edge i occupies [i*block_size, (i+1)*block_size).
struct SparseEdgeSet {
    int edge_layer = 0;
    int owner_task = 0;
    std::vector<int> src;
    std::vector<int> tgt;
    std::vector<double> weights;

    std::size_t count() const { return src.size(); }
};

// Per-neuron-layer bit vector; 1 marks a fixed neuron whose gradient is blocked.
struct GradientMask {
    std::vector<std::vector<std::uint8_t>> fixed;

    bool is_fixed(int layer, int neuron) const {
        return fixed[static_cast<std::size_t>(layer)][static_cast<std::size_t>(neuron)] != 0;
    }
    static GradientMask none(const Architecture& arch);
};

// Per-sample, per-layer activation summary: one scalar per neuron
// (spatial mean of the post-activation map for conv layers).
struct ActivationTrace {
    std::vector<std::vector<std::vector<double>>> per_layer;  // [layer][sample][neuron]
};

// Per-edge gradients aligned with the network's merged edge storage.
struct Gradients {
    std::vector<std::vector<double>> by_layer;
};

struct ForwardResult {
    std::vector<std::vector<double>> logits;  // [sample][output unit]
    std::optional<ActivationTrace> trace;
};

struct BackwardResult {
    double loss = 0.0;
    Gradients grads;
};

class NetworkState {
public:
    explicit NetworkState(Architecture arch);

    const Architecture& arch() const { return arch_; }
    int num_output_units() const { return arch_.layers().back().width; }

    // Append output units for a task's new classes; returns the unit indices.
    std::vector<int> extend_output(const std::vector<int>& class_ids, int task_id);

    int output_unit_for_class(int class_id) const;
    int class_for_output_unit(int unit) const { return unit_class_.at(static_cast<std::size_t>(unit)); }
    int task_of_output_unit(int unit) const { return unit_task_.at(static_cast<std::size_t>(unit)); }
    const std::vector<int>& output_units_of_task(int task_id) const;
    int num_tasks_seen() const { return static_cast<int>(task_units_.size()); }

    void add_edges(const SparseEdgeSet& set);
    bool has_edge(int edge_layer, int src, int tgt) const;
    // Stable removal of the given edge indices within one layer.
    void remove_edges(int edge_layer, const std::vector<std::size_t>& indices);
    void set_weight(int edge_layer, std::size_t edge, const std::vector<double>& block);

    struct EdgeLayer {
        int block_size = 1;
        std::vector<int> src, tgt, owner;
        std::vector<double> weights;
        std::unordered_set<std::int64_t> present;
        std::size_t count() const { return src.size(); }
    };
    const EdgeLayer& edge_layer(int e) const { return edges_.at(static_cast<std::size_t>(e)); }
    int num_edge_layers() const { return static_cast<int>(edges_.size()); }

    // Total scalar parameters (each conv kernel entry counted).
    std::int64_t param_count() const;
    std::vector<double> layer_densities() const;  // filled-edge fraction per edge layer
    std::uint64_t weights_hash(const std::set<int>& tasks) const;

    ForwardResult forward(const std::vector<std::vector<double>>& batch, Mode mode,
                          bool trace_requested = false, Exec exec = Exec::Serial,
                          Rng* dropout_rng = nullptr) const;

    // Softmax cross-entropy over the declared output subset, mean over the batch.
    // `targets` are output-unit indices and must lie in `output_subset`.
    BackwardResult backward(const std::vector<std::vector<double>>& batch,
                            const std::vector<int>& targets,
                            const std::vector<int>& output_subset,
                            const GradientMask& mask, Mode mode = Mode::Train,
                            Exec exec = Exec::Serial, Rng* dropout_rng = nullptr) const;

    void sgd_step(const Gradients& grads, double learning_rate, const std::set<int>& updatable_tasks);

    Gradients zero_gradients() const;

private:
    struct SampleWorkspace;
    void forward_sample(const double* x, SampleWorkspace& ws, bool train) const;
    void backward_sample(const SampleWorkspace& ws, int target,
                         const std::vector<int>& output_subset,
                         const GradientMask& mask, Gradients& grads, double& loss) const;
    void check_weights_finite() const;

    Architecture arch_;
    std::vector<EdgeLayer> edges_;
    std::vector<int> unit_class_;                       // output unit -> class id
    std::vector<int> unit_task_;                        // output unit -> owner task
    std::unordered_map<int, int> class_unit_;           // class id -> output unit
    std::unordered_map<int, std::vector<int>> task_units_;
};

}  // namespace afaf
