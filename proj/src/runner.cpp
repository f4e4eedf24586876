#include "afaf/runner.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "afaf/error.hpp"

namespace afaf {

void MethodSpec::validate() const {
    if (mode == AllocationMode::Spacenet &&
        (without_orthogonal_output || with_candidates_in_last_layer || reuse_all))
        throw ConfigError("ablation flags require afaf allocation mode");
}

std::string MethodSpec::name() const {
    std::string n = mode == AllocationMode::Afaf ? "afaf" : "spacenet";
    if (strategy == CandidateStrategy::Random) n += "-random";
    if (strategy == CandidateStrategy::Lowest) n += "-lowest";
    if (without_orthogonal_output) n += "-no-orth";
    if (with_candidates_in_last_layer) n += "-cand-last";
    if (reuse_all) n += "-reuse-all";
    return n;
}

namespace {

double accuracy_over(const NetworkState& net, const TaskData& task,
                     const std::vector<int>* restrict_units, Exec exec) {
    std::size_t correct = 0, total = 0;
    for (const auto& cls : task.test) {
        if (cls.samples.empty()) throw EmptyDatasetError("empty test set for class");
        const int want = net.output_unit_for_class(cls.class_id);
        auto fwd = net.forward(cls.samples, Mode::Eval, /*trace=*/false, exec);
        for (const auto& logits : fwd.logits) {
            int best = -1;
            double best_v = 0.0;
            if (restrict_units) {
                for (int u : *restrict_units) {
                    const double v = logits[static_cast<std::size_t>(u)];
                    if (best < 0 || v > best_v) {
                        best = u;
                        best_v = v;
                    }
                }
            } else {
                for (int u = 0; u < static_cast<int>(logits.size()); ++u) {
                    const double v = logits[static_cast<std::size_t>(u)];
                    if (best < 0 || v > best_v) {
                        best = u;
                        best_v = v;
                    }
                }
            }
            correct += best == want ? 1 : 0;
            ++total;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

std::vector<double> evaluate_class_il(const NetworkState& net,
                                      const std::vector<const TaskData*>& seen_tasks, Exec exec) {
    std::vector<double> row;
    for (const TaskData* t : seen_tasks) row.push_back(accuracy_over(net, *t, nullptr, exec));
    return row;
}

std::vector<double> evaluate_task_il(const NetworkState& net,
                                     const std::vector<const TaskData*>& seen_tasks,
                                     const std::vector<int>& task_labels, Exec exec) {
    if (task_labels.size() != seen_tasks.size())
        throw ConsistencyError("one task label per test set required");
    std::vector<double> row;
    for (std::size_t i = 0; i < seen_tasks.size(); ++i) {
        const std::vector<int>& units = net.output_units_of_task(task_labels[i]);  // throws if unknown
        row.push_back(accuracy_over(net, *seen_tasks[i], &units, exec));
    }
    return row;
}

RunOutput run_sequence(const Architecture& base_arch, const TaskSequence& benchmark,
                       const MethodSpec& method, const AllocationConfig& alloc_config,
                       const TrainConfig& train_config, std::uint64_t seed, RunObserver* observer) {
    method.validate();
    train_config.validate();
    if (benchmark.tasks.empty()) throw EmptyDatasetError("benchmark has no tasks");

    const auto t0 = std::chrono::steady_clock::now();

    NetworkState net(base_arch);
    NeuronLedger ledger(net.arch());
    const int L = net.arch().num_layers();

    AllocationConfig cfg = alloc_config;
    cfg.strategy = method.strategy;
    if (method.reuse_all) cfg.l_reuse = L - 1;

    RunOutput out{{}, std::move(net), std::move(ledger)};
    RunRecord& rec = out.record;
    rec.method = method.name();
    rec.benchmark = benchmark.name;
    rec.seed = seed;
    rec.reuse_start_task = benchmark.reuse_start_task;

    Rng root(seed);
    std::int64_t total_train_samples = 0;

    for (int t = 1; t <= static_cast<int>(benchmark.tasks.size()); ++t) {
        const TaskData& task = benchmark.tasks[static_cast<std::size_t>(t - 1)];
        Rng task_rng = root.split(static_cast<std::uint64_t>(t));

        auto new_units = out.net.extend_output(task.class_ids, t);
        out.ledger.extend_layer(L - 1, out.net.num_output_units());

        std::vector<ClassDatasetView> views;
        for (const auto& cls : task.train) {
            views.push_back({cls.class_id, &cls.samples});
            total_train_samples += static_cast<std::int64_t>(cls.samples.size());
        }

        const bool use_afaf =
            method.mode == AllocationMode::Afaf && t >= benchmark.reuse_start_task;
        // reusing every layer includes the output-adjacent one: its sources
        // come from existing neurons, which is what breaks the free-source rule
        const bool reused_last = method.with_candidates_in_last_layer || method.reuse_all;
        AllocationPlan plan;
        try {
            Rng alloc_rng = task_rng.split(1);
            plan = use_afaf
                       ? build_allocation(out.net, out.ledger, cfg, t, views, new_units, alloc_rng,
                                          reused_last)
                       : allocate_spacenet_style(out.net, out.ledger, cfg, t,
                                                 static_cast<int>(task.class_ids.size()), new_units,
                                                 alloc_rng);
        } catch (const CapacityError& e) {
            rec.failed = true;
            rec.failed_task = t;
            rec.failure = e.what();
            break;
        }
        plan.fix_all_output_adjacent = !method.without_orthogonal_output;

        AmbiguityCheckOptions checks;
        checks.require_free_output_sources = !reused_last;
        checks.check_l_reuse_range = !method.reuse_all;
        enforce_ambiguity_constraints(plan, out.ledger, out.net.arch(), checks);

        {
            Rng init_rng = task_rng.split(2);
            init_plan_weights(plan, out.net.arch(), init_rng);
        }
        for (const auto& set : plan.edges)
            if (!set.src.empty()) out.net.add_edges(set);
        commit_plan(out.ledger, plan);

        ImportanceReport importance;
        Rng train_rng = task_rng.split(3);
        try {
            rec.task_logs.push_back(
                train_task(out.net, plan, out.ledger, views, train_config, train_rng, &importance));
        } catch (const CapacityError& e) {
            rec.failed = true;
            rec.failed_task = t;
            rec.failure = e.what();
            break;
        }

        fix_neurons_after_task(out.ledger, importance, plan, cfg.fix_fraction);

        std::vector<const TaskData*> seen;
        std::vector<int> labels;
        for (int i = 1; i <= t; ++i) {
            seen.push_back(&benchmark.tasks[static_cast<std::size_t>(i - 1)]);
            labels.push_back(i);
        }
        rec.class_il.rows.push_back(evaluate_class_il(out.net, seen, train_config.exec));
        rec.task_il.rows.push_back(evaluate_task_il(out.net, seen, labels, train_config.exec));
        rec.la_entries.push_back(rec.class_il.rows.back().back());

        if (observer) observer->after_task(t, out.net, out.ledger, plan);
    }

    rec.params = out.net.param_count();
    if (!rec.class_il.rows.empty()) {
        const int trained = static_cast<int>(rec.class_il.rows.size());
        const std::int64_t per_epoch =
            std::max<std::int64_t>(1, total_train_samples / std::max(1, trained));
        rec.cost = flops_estimate(out.net.arch(), out.net.layer_densities(), per_epoch,
                                  train_config.epochs);
    }
    rec.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace afaf
