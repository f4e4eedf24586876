// Timing comparison of the serial reference kernels against the
// batch-parallel path, plus a bit-parity check between the two.
#include <chrono>
#include <cmath>
#include <iostream>
#include <set>
#include <vector>

#include "afaf/allocation.hpp"
#include "afaf/ledger.hpp"
#include "afaf/network.hpp"
#include "afaf/rng.hpp"

using namespace afaf;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

NetworkState make_net(int input, const std::vector<int>& hidden, int outputs, double density,
                      Rng& rng) {
    NetworkState net(Architecture::mlp(input, hidden, outputs));
    std::vector<int> classes(static_cast<std::size_t>(outputs));
    for (int i = 0; i < outputs; ++i) classes[static_cast<std::size_t>(i)] = i;
    net.extend_output(classes, 1);
    for (int e = 0; e < net.num_edge_layers(); ++e) {
        const int sw = net.arch().layer(e).width;
        const int tw = net.arch().layer(e + 1).width;
        SparseEdgeSet set;
        set.edge_layer = e;
        set.owner_task = 1;
        for (int s = 0; s < sw; ++s)
            for (int t = 0; t < tw; ++t)
                if (rng.uniform() < density) {
                    set.src.push_back(s);
                    set.tgt.push_back(t);
                    set.weights.push_back(rng.uniform(-0.3, 0.3));
                }
        if (!set.src.empty()) net.add_edges(set);
    }
    return net;
}

}  // namespace

int main(int argc, char** argv) {
    int batch = argc > 1 ? std::atoi(argv[1]) : 256;
    int reps = argc > 2 ? std::atoi(argv[2]) : 5;

    Rng rng(42);
    NetworkState net = make_net(784, {1024, 1024}, 10, 0.2, rng);
    GradientMask mask = GradientMask::none(net.arch());

    std::vector<std::vector<double>> batch_x;
    std::vector<int> targets;
    for (int i = 0; i < batch; ++i) {
        std::vector<double> x(784);
        for (auto& v : x) v = rng.uniform();
        batch_x.push_back(std::move(x));
        targets.push_back(static_cast<int>(rng.uniform_index(10)));
    }
    std::vector<int> subset(10);
    for (int i = 0; i < 10; ++i) subset[static_cast<std::size_t>(i)] = i;

    auto time_exec = [&](Exec exec) {
        double fwd = 0, bwd = 0;
        BackwardResult last;
        for (int r = 0; r < reps; ++r) {
            auto t0 = std::chrono::steady_clock::now();
            auto f = net.forward(batch_x, Mode::Eval, false, exec);
            fwd += seconds_since(t0);
            t0 = std::chrono::steady_clock::now();
            last = net.backward(batch_x, targets, subset, mask, Mode::Eval, exec);
            bwd += seconds_since(t0);
            (void)f;
        }
        return std::tuple<double, double, BackwardResult>{fwd / reps, bwd / reps, std::move(last)};
    };

    auto [sf, sb, sres] = time_exec(Exec::Serial);
    auto [pf, pb, pres] = time_exec(Exec::Parallel);

    bool identical = sres.loss == pres.loss;
    for (std::size_t e = 0; identical && e < sres.grads.by_layer.size(); ++e)
        for (std::size_t i = 0; identical && i < sres.grads.by_layer[e].size(); ++i)
            identical = sres.grads.by_layer[e][i] == pres.grads.by_layer[e][i];

    std::cout << "batch " << batch << ", mean of " << reps << " reps\n";
    std::cout << "  serial   forward " << sf << " s, backward " << sb << " s\n";
    std::cout << "  parallel forward " << pf << " s, backward " << pb << " s\n";
    std::cout << "  speedup  forward " << sf / pf << "x, backward " << sb / pb << "x\n";
    std::cout << "  gradient bit-parity: " << (identical ? "yes" : "NO") << "\n";
    return identical ? 0 : 1;
}
