#include "afaf/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace afaf {

int fraction_count(double fraction, int total) {
    if (fraction <= 0.0 || total <= 0) return 0;
    int c = static_cast<int>(std::floor(fraction * total + 0.5));
    if (c < 1) c = 1;
    return std::min(c, total);
}

void AllocationConfig::validate(const Architecture& arch) const {
    const int L = arch.num_layers();
    // l_reuse = L-1 is tolerated here for the reuse-everything comparison arm;
    // the ambiguity-constraint check is what rejects it in normal operation.
    if (l_reuse < 2 || l_reuse > L - 1)
        throw ConstraintError("l_reuse=" + std::to_string(l_reuse) + " outside [2, L-1] for L=" +
                              std::to_string(L));
    if (candidate_fraction < 0.0 || candidate_fraction >= 1.0)
        throw ConfigError("candidate_fraction must be in [0,1)");
    if (reuse_start_task < 1) throw ConfigError("reuse_start_task must be >= 1");
    if (static_cast<int>(epsilon.size()) != L - 1)
        throw ConfigError("epsilon must have one entry per edge layer");
    for (double e : epsilon)
        if (e <= 0.0 || e > 1.0) throw ConfigError("epsilon entries must be in (0,1]");
    if (static_cast<int>(alloc_fraction.size()) != L)
        throw ConfigError("alloc_fraction must have one entry per layer");
    for (double f : alloc_fraction)
        if (f <= 0.0 || f > 1.0) throw ConfigError("alloc_fraction entries must be in (0,1]");
    if (static_cast<int>(fix_fraction.size()) != L)
        throw ConfigError("fix_fraction must have one entry per layer");
    for (double f : fix_fraction)
        if (f < 0.0 || f > 1.0) throw ConfigError("fix_fraction entries must be in [0,1]");
}

std::vector<std::vector<double>> average_class_activation(const NetworkState& network,
                                                          const std::vector<std::vector<double>>& class_data,
                                                          Exec exec) {
    if (class_data.empty()) throw EmptyDatasetError("class dataset is empty");
    auto fwd = network.forward(class_data, Mode::Eval, /*trace=*/true, exec);
    const auto& trace = fwd.trace->per_layer;
    std::vector<std::vector<double>> avg(trace.size());
    const double inv = 1.0 / static_cast<double>(class_data.size());
    for (std::size_t l = 0; l < trace.size(); ++l) {
        avg[l].assign(trace[l].front().size(), 0.0);
        for (const auto& row : trace[l])
            for (std::size_t i = 0; i < row.size(); ++i) avg[l][i] += row[i];
        for (double& v : avg[l]) v *= inv;
    }
    return avg;
}

std::vector<int> select_candidates(const std::vector<double>& scores, int kappa,
                                   CandidateStrategy strategy, Rng& rng) {
    const int n = static_cast<int>(scores.size());
    if (kappa > n) throw CapacityError("kappa exceeds layer width");
    if (kappa <= 0) return {};
    for (double s : scores)
        if (!std::isfinite(s)) throw NumericStateError("non-finite activation score");

    if (strategy == CandidateStrategy::Random) {
        auto pick = rng.sample_indices(static_cast<std::size_t>(n), static_cast<std::size_t>(kappa));
        std::sort(pick.begin(), pick.end());
        return pick;
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    if (strategy == CandidateStrategy::Highest) {
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)])
                return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
            return a < b;
        });
    } else {
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)])
                return scores[static_cast<std::size_t>(a)] < scores[static_cast<std::size_t>(b)];
            return a < b;
        });
    }
    order.resize(static_cast<std::size_t>(kappa));
    return order;
}

std::vector<int> select_free_neurons(const NeuronLedger& ledger, int layer, int count, Rng& rng) {
    if (count <= 0) return {};
    auto never = ledger.neurons_with_status(layer, NeuronStatus::NeverUsed);
    auto used = ledger.neurons_with_status(layer, NeuronStatus::Used);
    if (count > static_cast<int>(never.size() + used.size()))
        throw CapacityError("capacity exhausted: layer " + std::to_string(layer) + " has " +
                            std::to_string(never.size() + used.size()) + " non-fixed neurons, need " +
                            std::to_string(count));
    std::vector<int> out;
    if (count <= static_cast<int>(never.size())) {
        out = rng.sample_from(never, static_cast<std::size_t>(count));
    } else {
        out = never;
        auto extra = rng.sample_from(used, static_cast<std::size_t>(count) - never.size());
        out.insert(out.end(), extra.begin(), extra.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::vector<int> sorted_union(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out(a);
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Sample round(eps*|src|*|tgt|) pairs, skipping pairs already present in the
// network or previously chosen for this plan.
void sample_edges(const NetworkState& network, AllocationPlan& plan, int e,
                  const std::vector<int>& src, const std::vector<int>& tgt, double eps, Rng& rng,
                  std::set<std::pair<int, int>>& chosen) {
    const std::size_t npairs = src.size() * tgt.size();
    const int want = fraction_count(eps, static_cast<int>(npairs));
    if (want == 0) return;
    std::vector<std::size_t> legal;
    legal.reserve(npairs);
    for (std::size_t p = 0; p < npairs; ++p) {
        const int s = src[p / tgt.size()];
        const int t = tgt[p % tgt.size()];
        if (chosen.count({s, t}) || network.has_edge(e, s, t)) continue;
        legal.push_back(p);
    }
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(want), legal.size());
    auto idx = rng.sample_indices(legal.size(), take);
    std::sort(idx.begin(), idx.end());
    SparseEdgeSet& set = plan.edges[static_cast<std::size_t>(e)];
    for (int i : idx) {
        const std::size_t p = legal[static_cast<std::size_t>(i)];
        const int s = src[p / tgt.size()];
        const int t = tgt[p % tgt.size()];
        chosen.insert({s, t});
        set.src.push_back(s);
        set.tgt.push_back(t);
    }
}

void record_union(AllocationPlan& plan, int layer, const std::vector<int>& neurons,
                  const NeuronLedger& ledger) {
    auto& u = plan.layers[static_cast<std::size_t>(layer)].alloc_union;
    for (int n : neurons)
        if (!ledger.is_fixed(layer, n)) u.push_back(n);
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
}

void init_plan(AllocationPlan& plan, const Architecture& arch, int task_id, int num_classes,
               int first_edge_layer, const std::vector<int>& new_output_units) {
    const int L = arch.num_layers();
    plan.task_id = task_id;
    plan.first_edge_layer = first_edge_layer;
    plan.layers.resize(static_cast<std::size_t>(L));
    for (auto& la : plan.layers) la.candidates.resize(static_cast<std::size_t>(num_classes));
    plan.edges.resize(static_cast<std::size_t>(L - 1));
    for (int e = 0; e < L - 1; ++e) {
        plan.edges[static_cast<std::size_t>(e)].edge_layer = e;
        plan.edges[static_cast<std::size_t>(e)].owner_task = task_id;
    }
    plan.grow_sites.assign(static_cast<std::size_t>(L - 1), {});
    plan.new_output_units = new_output_units;
    plan.layers[static_cast<std::size_t>(L - 1)].free = new_output_units;
    plan.layers[static_cast<std::size_t>(L - 1)].alloc_union = new_output_units;
}

}  // namespace

AllocationPlan build_allocation(const NetworkState& network, const NeuronLedger& ledger,
                                const AllocationConfig& config, int task_id,
                                const std::vector<ClassDatasetView>& task_data,
                                const std::vector<int>& new_output_units, Rng& rng,
                                bool candidates_in_last_layer) {
    const Architecture& arch = network.arch();
    const int L = arch.num_layers();
    config.validate(arch);
    if (task_data.empty()) throw EmptyDatasetError("task has no classes");

    const int fe = config.l_reuse - 1;  // first edge layer, 0-based
    const int num_classes = static_cast<int>(task_data.size());
    AllocationPlan plan;
    init_plan(plan, arch, task_id, num_classes, fe, new_output_units);

    // per-layer allocation sizes: |h_l^alloc|, kappa_l, free remainder
    std::vector<int> n_alloc(static_cast<std::size_t>(L), 0);
    std::vector<int> kappa(static_cast<std::size_t>(L), 0);
    for (int l = fe; l <= L - 2; ++l) {
        n_alloc[static_cast<std::size_t>(l)] = fraction_count(config.alloc_fraction[static_cast<std::size_t>(l)],
                                                              arch.layer(l).width);
        const bool last_hidden = l == L - 2;
        if (!last_hidden || candidates_in_last_layer) {
            int k = static_cast<int>(std::floor(config.candidate_fraction * n_alloc[static_cast<std::size_t>(l)] + 0.5));
            // a nonzero free remainder must always exist
            if (k >= n_alloc[static_cast<std::size_t>(l)]) k = n_alloc[static_cast<std::size_t>(l)] - 1;
            kappa[static_cast<std::size_t>(l)] = std::max(0, k);
        }
    }

    // candidate scores from the trained model f^{t-1} (Eq. 1, Eq. 2)
    for (int c = 0; c < num_classes; ++c) {
        Rng crng = rng.split(1000 + static_cast<std::uint64_t>(c));
        auto scores = average_class_activation(network, *task_data[static_cast<std::size_t>(c)].samples);
        for (int l = fe; l <= L - 2; ++l) {
            if (kappa[static_cast<std::size_t>(l)] == 0) continue;
            plan.layers[static_cast<std::size_t>(l)].candidates[static_cast<std::size_t>(c)] =
                select_candidates(scores[static_cast<std::size_t>(l)], kappa[static_cast<std::size_t>(l)],
                                  config.strategy, crng);
        }
    }

    // shared free sets, sampled once per task
    for (int l = fe; l <= L - 2; ++l) {
        const int free_count = n_alloc[static_cast<std::size_t>(l)] - kappa[static_cast<std::size_t>(l)];
        plan.layers[static_cast<std::size_t>(l)].free = select_free_neurons(ledger, l, free_count, rng);
    }

    // per-class edge allocation (Eq. 3), unioned with duplicates collapsed
    std::vector<std::set<std::pair<int, int>>> chosen(static_cast<std::size_t>(L - 1));
    for (int c = 0; c < num_classes; ++c) {
        Rng crng = rng.split(2000 + static_cast<std::uint64_t>(c));
        for (int e = fe; e <= L - 2; ++e) {
            const auto& src_alloc = plan.layers[static_cast<std::size_t>(e)];
            std::vector<int> src = sorted_union(src_alloc.candidates[static_cast<std::size_t>(c)],
                                                src_alloc.free);
            std::vector<int> tgt;
            if (e + 1 <= L - 2) {
                const auto& tgt_alloc = plan.layers[static_cast<std::size_t>(e + 1)];
                std::vector<int> cand_ok;
                for (int n : tgt_alloc.candidates[static_cast<std::size_t>(c)])
                    if (!ledger.is_fixed(e + 1, n)) cand_ok.push_back(n);
                tgt = sorted_union(cand_ok, tgt_alloc.free);
            } else {
                tgt = new_output_units;
            }
            if (src.empty() || tgt.empty()) continue;
            sample_edges(network, plan, e, src, tgt, config.epsilon[static_cast<std::size_t>(e)], crng,
                         chosen[static_cast<std::size_t>(e)]);
            plan.grow_sites[static_cast<std::size_t>(e)].push_back({src, tgt});
            record_union(plan, e, src, ledger);
            if (e + 1 <= L - 2) record_union(plan, e + 1, tgt, ledger);
        }
    }
    return plan;
}

AllocationPlan allocate_spacenet_style(const NetworkState& network, const NeuronLedger& ledger,
                                       const AllocationConfig& config, int task_id, int num_classes,
                                       const std::vector<int>& new_output_units, Rng& rng) {
    const Architecture& arch = network.arch();
    const int L = arch.num_layers();
    AllocationPlan plan;
    init_plan(plan, arch, task_id, num_classes, 0, new_output_units);

    for (int l = 0; l <= L - 2; ++l) {
        const int count = fraction_count(config.alloc_fraction[static_cast<std::size_t>(l)],
                                         arch.layer(l).width);
        plan.layers[static_cast<std::size_t>(l)].free = select_free_neurons(ledger, l, count, rng);
        plan.layers[static_cast<std::size_t>(l)].alloc_union = plan.layers[static_cast<std::size_t>(l)].free;
    }
    std::vector<std::set<std::pair<int, int>>> chosen(static_cast<std::size_t>(L - 1));
    for (int e = 0; e <= L - 2; ++e) {
        const std::vector<int>& src = plan.layers[static_cast<std::size_t>(e)].free;
        const std::vector<int>& tgt = e + 1 <= L - 2 ? plan.layers[static_cast<std::size_t>(e + 1)].free
                                                     : new_output_units;
        if (src.empty() || tgt.empty()) continue;
        sample_edges(network, plan, e, src, tgt, config.epsilon[static_cast<std::size_t>(e)], rng,
                     chosen[static_cast<std::size_t>(e)]);
        plan.grow_sites[static_cast<std::size_t>(e)].push_back({src, tgt});
    }
    return plan;
}

const AllocationPlan& enforce_ambiguity_constraints(const AllocationPlan& plan,
                                                    const NeuronLedger& ledger,
                                                    const Architecture& arch,
                                                    const AmbiguityCheckOptions& opts) {
    const int L = arch.num_layers();

    if (opts.require_free_output_sources) {
        const auto& free = plan.layers[static_cast<std::size_t>(L - 2)].free;
        for (int s : plan.edges[static_cast<std::size_t>(L - 2)].src)
            if (!std::binary_search(free.begin(), free.end(), s))
                throw ConstraintError("rule (a): output edge source " + std::to_string(s) +
                                      " is not a free neuron");
    }
    for (int e = 0; e < L - 1; ++e)
        for (int t : plan.edges[static_cast<std::size_t>(e)].tgt)
            if (ledger.is_fixed(e + 1, t))
                throw ConstraintError("rule (b): edge targets fixed neuron " + std::to_string(t) +
                                      " in layer " + std::to_string(e + 1));
    if (opts.check_l_reuse_range && plan.first_edge_layer > 0) {
        const int l_reuse = plan.first_edge_layer + 1;
        if (l_reuse < 2 || l_reuse > L - 2)
            throw ConstraintError("rule (c): l_reuse=" + std::to_string(l_reuse) + " outside [2, L-2]");
    }
    return plan;
}

void init_plan_weights(AllocationPlan& plan, const Architecture& arch, Rng& rng) {
    for (std::size_t e = 0; e < plan.edges.size(); ++e) {
        SparseEdgeSet& set = plan.edges[e];
        if (set.src.empty()) {
            set.weights.clear();
            continue;
        }
        std::set<int> fan_in(set.src.begin(), set.src.end());
        std::set<int> fan_out(set.tgt.begin(), set.tgt.end());
        const double b = std::sqrt(6.0 / static_cast<double>(fan_in.size() + fan_out.size()));
        const std::size_t block = static_cast<std::size_t>(arch.block_size(static_cast<int>(e)));
        set.weights.resize(set.count() * block);
        for (double& w : set.weights) w = rng.uniform(-b, b);
    }
}

}  // namespace afaf
