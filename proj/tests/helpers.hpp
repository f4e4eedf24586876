#pragma once

#include <vector>

#include "afaf/network.hpp"
#include "afaf/rng.hpp"

namespace afaf::testing {

// MLP network with one output unit per class of `classes`, all owned by task 1.
inline NetworkState make_mlp_net(int input, const std::vector<int>& hidden, int outputs,
                                 int owner_task = 1) {
    // outputs = 0 leaves a placeholder width; the first extend_output resizes it
    NetworkState net(Architecture::mlp(input, hidden, outputs > 0 ? outputs : 1));
    std::vector<int> classes;
    for (int i = 0; i < outputs; ++i) classes.push_back(i);
    if (!classes.empty()) net.extend_output(classes, owner_task);
    return net;
}

// Bernoulli(density) edges with uniform weights, skipping pairs already present.
inline void add_random_edges(NetworkState& net, int edge_layer, double density, Rng& rng,
                             int owner_task = 1, double scale = 0.5) {
    const int sw = net.arch().layer(edge_layer).width;
    const int tw = net.arch().layer(edge_layer + 1).width;
    const int block = net.arch().block_size(edge_layer);
    SparseEdgeSet set;
    set.edge_layer = edge_layer;
    set.owner_task = owner_task;
    for (int s = 0; s < sw; ++s)
        for (int t = 0; t < tw; ++t) {
            if (rng.uniform() >= density || net.has_edge(edge_layer, s, t)) continue;
            set.src.push_back(s);
            set.tgt.push_back(t);
            for (int b = 0; b < block; ++b) set.weights.push_back(rng.uniform(-scale, scale));
        }
    if (!set.src.empty()) net.add_edges(set);
}

// Dense-matrix forward oracle for flat MLPs: absent edges are zeros.
inline std::vector<double> dense_oracle_forward(const NetworkState& net,
                                                const std::vector<double>& x) {
    const Architecture& arch = net.arch();
    std::vector<double> cur = x;
    for (int e = 0; e < net.num_edge_layers(); ++e) {
        const int sw = arch.layer(e).width;
        const int tw = arch.layer(e + 1).width;
        std::vector<double> W(static_cast<std::size_t>(sw) * tw, 0.0);
        const auto& el = net.edge_layer(e);
        for (std::size_t i = 0; i < el.count(); ++i)
            W[static_cast<std::size_t>(el.src[i]) * tw + el.tgt[i]] = el.weights[i];
        std::vector<double> nxt(static_cast<std::size_t>(tw), 0.0);
        for (int t = 0; t < tw; ++t) {
            double acc = 0.0;
            for (int s = 0; s < sw; ++s) acc += cur[static_cast<std::size_t>(s)] * W[static_cast<std::size_t>(s) * tw + t];
            nxt[static_cast<std::size_t>(t)] = acc;
        }
        if (arch.layer(e + 1).act == Activation::Rectifier)
            for (double& v : nxt) v = v > 0.0 ? v : 0.0;
        cur = std::move(nxt);
    }
    return cur;
}

}  // namespace afaf::testing
