#pragma once

#include <vector>

#include "afaf/error.hpp"
#include "afaf/layer.hpp"
#include "afaf/network.hpp"

namespace afaf {

enum class NeuronStatus { NeverUsed, Used, Fixed };

// Per-layer status of every neuron plus owning-task bookkeeping.
// Transitions are monotone: never-used -> used -> fixed.
class NeuronLedger {
public:
    explicit NeuronLedger(const Architecture& arch) {
        status_.resize(static_cast<std::size_t>(arch.num_layers()));
        owners_.resize(status_.size());
        for (int l = 0; l < arch.num_layers(); ++l) {
            status_[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(arch.layer(l).width),
                                                        NeuronStatus::NeverUsed);
            owners_[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(arch.layer(l).width));
        }
    }

    int num_layers() const { return static_cast<int>(status_.size()); }
    int width(int layer) const { return static_cast<int>(status_[static_cast<std::size_t>(layer)].size()); }

    NeuronStatus status(int layer, int neuron) const {
        return status_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(neuron)];
    }
    bool is_fixed(int layer, int neuron) const { return status(layer, neuron) == NeuronStatus::Fixed; }

    const std::vector<int>& owners(int layer, int neuron) const {
        return owners_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(neuron)];
    }

    // Grow a layer (output units appended as the class set expands).
    void extend_layer(int layer, int new_width) {
        auto& st = status_[static_cast<std::size_t>(layer)];
        if (new_width < static_cast<int>(st.size())) throw ConsistencyError("ledger layers never shrink");
        st.resize(static_cast<std::size_t>(new_width), NeuronStatus::NeverUsed);
        owners_[static_cast<std::size_t>(layer)].resize(static_cast<std::size_t>(new_width));
    }

    void mark_used(int layer, int neuron, int task_id) {
        auto& st = status_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(neuron)];
        if (st == NeuronStatus::Fixed)
            throw ConsistencyError("cannot mark a fixed neuron as used");
        st = NeuronStatus::Used;
        auto& own = owners_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(neuron)];
        for (int t : own)
            if (t == task_id) return;
        own.push_back(task_id);
    }

    void mark_fixed(int layer, int neuron) {
        status_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(neuron)] = NeuronStatus::Fixed;
    }

    std::vector<int> neurons_with_status(int layer, NeuronStatus s) const {
        std::vector<int> out;
        const auto& st = status_[static_cast<std::size_t>(layer)];
        for (int i = 0; i < static_cast<int>(st.size()); ++i)
            if (st[static_cast<std::size_t>(i)] == s) out.push_back(i);
        return out;
    }

    int count_status(int layer, NeuronStatus s) const {
        return static_cast<int>(neurons_with_status(layer, s).size());
    }

    GradientMask gradient_mask(const Architecture& arch) const {
        GradientMask m = GradientMask::none(arch);
        for (int l = 0; l < num_layers(); ++l)
            for (int i = 0; i < width(l); ++i)
                if (is_fixed(l, i)) m.fixed[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)] = 1;
        return m;
    }

private:
    std::vector<std::vector<NeuronStatus>> status_;
    std::vector<std::vector<std::vector<int>>> owners_;
};

}  // namespace afaf
