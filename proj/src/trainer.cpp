#include "afaf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

namespace afaf {

void EdgeScoreAccumulator::reset(const NetworkState& net) {
    abs_sum_.assign(static_cast<std::size_t>(net.num_edge_layers()), {});
    for (int e = 0; e < net.num_edge_layers(); ++e)
        abs_sum_[static_cast<std::size_t>(e)].assign(net.edge_layer(e).count(), 0.0);
    steps_ = 0;
}

void EdgeScoreAccumulator::accumulate(const NetworkState& net, const Gradients& grads) {
    if (abs_sum_.size() != grads.by_layer.size())
        throw ConsistencyError("accumulator not aligned with network");
    for (int e = 0; e < net.num_edge_layers(); ++e) {
        const auto& el = net.edge_layer(e);
        auto& acc = abs_sum_[static_cast<std::size_t>(e)];
        if (acc.size() != el.count()) throw ConsistencyError("accumulator stale after rewiring");
        const auto& g = grads.by_layer[static_cast<std::size_t>(e)];
        for (std::size_t i = 0; i < el.count(); ++i) {
            double s = 0.0;
            for (int b = 0; b < el.block_size; ++b) s += std::abs(g[i * el.block_size + b]);
            acc[i] += s;
        }
    }
    ++steps_;
}

std::vector<std::vector<double>> EdgeScoreAccumulator::mean_scores() const {
    if (steps_ == 0) throw StalenessError("no gradients accumulated since last reset");
    auto out = abs_sum_;
    const double inv = 1.0 / static_cast<double>(steps_);
    for (auto& lay : out)
        for (double& v : lay) v *= inv;
    return out;
}

ImportanceReport make_importance_report(const NetworkState& net, int task_id,
                                        const std::vector<std::vector<double>>& edge_scores) {
    ImportanceReport rep;
    rep.edge_scores = edge_scores;
    rep.neuron_scores.assign(static_cast<std::size_t>(net.arch().num_layers()), {});
    for (int l = 0; l < net.arch().num_layers(); ++l)
        rep.neuron_scores[static_cast<std::size_t>(l)].assign(
            static_cast<std::size_t>(net.arch().layer(l).width), 0.0);
    for (int e = 0; e < net.num_edge_layers(); ++e) {
        const auto& el = net.edge_layer(e);
        for (std::size_t i = 0; i < el.count(); ++i) {
            if (el.owner[i] != task_id) continue;
            rep.neuron_scores[static_cast<std::size_t>(e)][static_cast<std::size_t>(el.src[i])] +=
                edge_scores[static_cast<std::size_t>(e)][i];
        }
    }
    return rep;
}

DropGrowResult drop_and_grow(NetworkState& net, int task_id,
                             const std::vector<std::vector<double>>& edge_scores, double zeta,
                             const std::vector<std::vector<double>>& neuron_scores,
                             const AllocationPlan& plan, Rng&) {
    DropGrowResult res;

    struct EdgeRef {
        double score;
        int layer, src, tgt;
        std::size_t idx;
    };
    std::vector<EdgeRef> task_edges;
    for (int e = 0; e < net.num_edge_layers(); ++e) {
        const auto& el = net.edge_layer(e);
        for (std::size_t i = 0; i < el.count(); ++i)
            if (el.owner[i] == task_id)
                task_edges.push_back({edge_scores[static_cast<std::size_t>(e)][i], e, el.src[i], el.tgt[i], i});
    }
    const int n = static_cast<int>(std::floor(zeta * static_cast<double>(task_edges.size())));
    if (n < 1) return res;

    // drop the n lowest scores; ties in (layer, src, tgt) order
    std::sort(task_edges.begin(), task_edges.end(), [](const EdgeRef& a, const EdgeRef& b) {
        if (a.score != b.score) return a.score < b.score;
        return std::tie(a.layer, a.src, a.tgt) < std::tie(b.layer, b.src, b.tgt);
    });
    std::vector<std::vector<std::size_t>> to_drop(static_cast<std::size_t>(net.num_edge_layers()));
    std::set<std::tuple<int, int, int>> dropped_pairs;
    for (int i = 0; i < n; ++i) {
        to_drop[static_cast<std::size_t>(task_edges[static_cast<std::size_t>(i)].layer)].push_back(
            task_edges[static_cast<std::size_t>(i)].idx);
        dropped_pairs.insert({task_edges[static_cast<std::size_t>(i)].layer,
                              task_edges[static_cast<std::size_t>(i)].src,
                              task_edges[static_cast<std::size_t>(i)].tgt});
    }
    for (int e = 0; e < net.num_edge_layers(); ++e)
        net.remove_edges(e, to_drop[static_cast<std::size_t>(e)]);
    res.dropped = n;

    // growth candidates: absent legal pairs ranked by neuron-score product
    struct Site {
        double score;
        int layer, src, tgt;
    };
    std::vector<Site> sites;
    std::set<std::tuple<int, int, int>> seen;
    for (int e = 0; e < static_cast<int>(plan.grow_sites.size()); ++e) {
        for (const auto& ps : plan.grow_sites[static_cast<std::size_t>(e)]) {
            for (int s : ps.src)
                for (int t : ps.tgt) {
                    if (net.has_edge(e, s, t)) continue;
                    if (dropped_pairs.count({e, s, t})) continue;
                    if (!seen.insert({e, s, t}).second) continue;
                    const double sc = neuron_scores[static_cast<std::size_t>(e)][static_cast<std::size_t>(s)] *
                                      neuron_scores[static_cast<std::size_t>(e + 1)][static_cast<std::size_t>(t)];
                    sites.push_back({sc, e, s, t});
                }
        }
    }
    std::sort(sites.begin(), sites.end(), [](const Site& a, const Site& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.layer, a.src, a.tgt) < std::tie(b.layer, b.src, b.tgt);
    });

    const int grow_n = std::min<int>(n, static_cast<int>(sites.size()));
    std::vector<SparseEdgeSet> grown(static_cast<std::size_t>(net.num_edge_layers()));
    for (int e = 0; e < net.num_edge_layers(); ++e) {
        grown[static_cast<std::size_t>(e)].edge_layer = e;
        grown[static_cast<std::size_t>(e)].owner_task = task_id;
    }
    for (int i = 0; i < grow_n; ++i) {
        const Site& s = sites[static_cast<std::size_t>(i)];
        auto& set = grown[static_cast<std::size_t>(s.layer)];
        set.src.push_back(s.src);
        set.tgt.push_back(s.tgt);
    }
    for (int e = 0; e < net.num_edge_layers(); ++e) {
        auto& set = grown[static_cast<std::size_t>(e)];
        if (set.src.empty()) continue;
        set.weights.assign(set.count() * static_cast<std::size_t>(net.arch().block_size(e)), 0.0);
        net.add_edges(set);
    }
    res.grown = grow_n;
    res.shortfall = n - grow_n;
    return res;
}

TrainLog train_task(NetworkState& net, const AllocationPlan& plan, const NeuronLedger& ledger,
                    const std::vector<ClassDatasetView>& task_data, const TrainConfig& config,
                    Rng& rng, ImportanceReport* importance_out) {
    config.validate();
    if (task_data.empty()) throw EmptyDatasetError("task has no classes");

    std::vector<const std::vector<double>*> samples;
    std::vector<int> targets;
    for (const auto& cd : task_data) {
        const int unit = net.output_unit_for_class(cd.class_id);
        for (const auto& s : *cd.samples) {
            samples.push_back(&s);
            targets.push_back(unit);
        }
    }
    if (samples.empty()) throw EmptyDatasetError("task datasets contain no samples");

    std::vector<int> output_subset;
    if (config.loss_over_all_seen) {
        for (int u = 0; u < net.num_output_units(); ++u) output_subset.push_back(u);
    } else {
        output_subset = net.output_units_of_task(plan.task_id);
    }

    const GradientMask mask = ledger.gradient_mask(net.arch());
    const std::set<int> updatable = {plan.task_id};
    Rng order_rng = rng.split(11);
    Rng dropout_rng = rng.split(13);

    EdgeScoreAccumulator acc;
    TrainLog log;
    const std::size_t n = samples.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        acc.reset(net);
        order_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t base = 0; base < n; base += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), n - base);
            std::vector<std::vector<double>> batch;
            std::vector<int> bt;
            batch.reserve(m);
            for (std::size_t j = 0; j < m; ++j) {
                batch.push_back(*samples[static_cast<std::size_t>(order[base + j])]);
                bt.push_back(targets[static_cast<std::size_t>(order[base + j])]);
            }
            auto back = net.backward(batch, bt, output_subset, mask, Mode::Train, config.exec, &dropout_rng);
            if (!std::isfinite(back.loss))
                throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch) +
                                      "; last good epoch " + std::to_string(epoch - 1));
            net.sgd_step(back.grads, config.learning_rate, updatable);
            acc.accumulate(net, back.grads);
            epoch_loss += back.loss;
            ++batches;
        }

        EpochLog el;
        el.epoch = epoch;
        el.loss = epoch_loss / static_cast<double>(batches);

        {  // training accuracy, eval pass
            std::vector<std::vector<double>> all;
            all.reserve(n);
            for (auto* s : samples) all.push_back(*s);
            auto fwd = net.forward(all, Mode::Eval, false, config.exec);
            std::size_t correct = 0;
            for (std::size_t i = 0; i < n; ++i) {
                int best = output_subset.front();
                for (int u : output_subset)
                    if (fwd.logits[i][static_cast<std::size_t>(u)] >
                        fwd.logits[i][static_cast<std::size_t>(best)])
                        best = u;
                if (best == targets[i]) ++correct;
            }
            el.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
        }

        const bool rewire = config.zeta > 0.0 && epoch % config.cycle_period == 0 && epoch < config.epochs;
        if (rewire) {
            auto scores = acc.mean_scores();
            auto rep = make_importance_report(net, plan.task_id, scores);
            Rng g = rng.split(100 + static_cast<std::uint64_t>(epoch));
            auto dg = drop_and_grow(net, plan.task_id, scores, config.zeta, rep.neuron_scores, plan, g);
            el.dropped = dg.dropped;
            el.grown = dg.grown;
            el.shortfall = dg.shortfall;
            log.total_shortfall += dg.shortfall;
        }
        log.epochs.push_back(el);
    }

    if (importance_out) {
        auto scores = acc.mean_scores();  // window = final epoch
        *importance_out = make_importance_report(net, plan.task_id, scores);
    }
    return log;
}

void commit_plan(NeuronLedger& ledger, const AllocationPlan& plan) {
    for (int l = 0; l < static_cast<int>(plan.layers.size()); ++l)
        for (int nidx : plan.layers[static_cast<std::size_t>(l)].alloc_union)
            if (!ledger.is_fixed(l, nidx)) ledger.mark_used(l, nidx, plan.task_id);
}

void fix_neurons_after_task(NeuronLedger& ledger, const ImportanceReport& importance,
                            const AllocationPlan& plan, const std::vector<double>& fix_fraction) {
    const int L = static_cast<int>(plan.layers.size());
    for (int l = 1; l <= L - 2; ++l) {  // input neurons are never fixed
        const auto& alloc = plan.layers[static_cast<std::size_t>(l)].alloc_union;
        if (alloc.empty()) continue;
        if (l == L - 2 && plan.fix_all_output_adjacent) {
            for (int nidx : alloc) ledger.mark_fixed(l, nidx);
            continue;
        }
        const int count = fraction_count(fix_fraction[static_cast<std::size_t>(l)],
                                         static_cast<int>(alloc.size()));
        if (count == 0) continue;
        std::vector<int> order(alloc);
        const auto& sc = importance.neuron_scores[static_cast<std::size_t>(l)];
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (sc[static_cast<std::size_t>(a)] != sc[static_cast<std::size_t>(b)])
                return sc[static_cast<std::size_t>(a)] > sc[static_cast<std::size_t>(b)];
            return a < b;
        });
        for (int i = 0; i < count; ++i) ledger.mark_fixed(l, order[static_cast<std::size_t>(i)]);
    }
    for (int u : plan.new_output_units) ledger.mark_fixed(L - 1, u);
}

}  // namespace afaf
