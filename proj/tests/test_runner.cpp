#include <doctest.h>

#include <set>
#include <vector>

#include "afaf/error.hpp"
#include "afaf/runner.hpp"
#include "helpers.hpp"

using namespace afaf;
using namespace afaf::testing;

namespace {

// One-hot test sets for hand-built nets: class c answers to input axis c.
TaskData one_hot_task(const std::vector<int>& classes, int dim) {
    TaskData t;
    t.class_ids = classes;
    for (int c : classes) {
        ClassDataset cd;
        cd.class_id = c;
        std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
        x[static_cast<std::size_t>(c)] = 1.0;
        cd.samples.push_back(x);
        t.test.push_back(cd);
    }
    return t;
}

void wire(NetworkState& net, int src, int tgt, double w, int owner) {
    SparseEdgeSet set;
    set.edge_layer = 0;
    set.owner_task = owner;
    set.src = {src};
    set.tgt = {tgt};
    set.weights = {w};
    net.add_edges(set);
}

AllocationConfig synth_alloc(const Architecture& arch) {
    AllocationConfig cfg;
    cfg.l_reuse = 2;
    cfg.candidate_fraction = 0.3;
    cfg.epsilon.assign(static_cast<std::size_t>(arch.num_edge_layers()), 0.6);
    cfg.alloc_fraction.assign(static_cast<std::size_t>(arch.num_layers()), 0.18);
    cfg.alloc_fraction[0] = 1.0;
    cfg.fix_fraction.assign(static_cast<std::size_t>(arch.num_layers()), 0.3);
    return cfg;
}

TrainConfig synth_train() {
    TrainConfig tc;
    tc.epochs = 6;
    tc.batch_size = 16;
    tc.learning_rate = 0.5;
    tc.zeta = 0.2;
    return tc;
}

TaskSequence synth_bench(int tasks, std::uint64_t seed, int reuse_start = 3) {
    return synth_gaussian_tasks(tasks, 2, 16, 4.0, 32, 16, seed, 0.0, reuse_start);
}

const Architecture kSynthArch = Architecture::mlp(16, {30, 30}, 1);

}  // namespace

TEST_CASE("method spec names and validation") {
    MethodSpec m;
    CHECK(m.name() == "afaf");
    m.strategy = CandidateStrategy::Random;
    m.reuse_all = true;
    CHECK(m.name() == "afaf-random-reuse-all");
    MethodSpec s;
    s.mode = AllocationMode::Spacenet;
    CHECK(s.name() == "spacenet");
    s.without_orthogonal_output = true;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    MethodSpec ok;
    ok.with_candidates_in_last_layer = true;
    ok.validate();
    CHECK(ok.name() == "afaf-cand-last");
}

TEST_CASE("class-il on a disjoint hand-built network is perfect") {
    auto net = make_mlp_net(4, {}, 0);
    net.extend_output({0, 1}, 1);
    net.extend_output({2, 3}, 2);
    for (int i = 0; i < 4; ++i) wire(net, i, i, 1.0, i < 2 ? 1 : 2);
    TaskData t1 = one_hot_task({0, 1}, 4);
    TaskData t2 = one_hot_task({2, 3}, 4);
    auto row = evaluate_class_il(net, {&t1, &t2});
    CHECK(row == std::vector<double>{1.0, 1.0});
}

TEST_CASE("task-il beats class-il on an ambiguous network") {
    auto net = make_mlp_net(4, {}, 0);
    net.extend_output({0, 1}, 1);
    net.extend_output({2, 3}, 2);
    for (int i = 0; i < 4; ++i) wire(net, i, i, 1.0, i < 2 ? 1 : 2);
    wire(net, 0, 2, 2.0, 2);  // later task's unit shadows class 0
    TaskData t1 = one_hot_task({0, 1}, 4);
    TaskData t2 = one_hot_task({2, 3}, 4);
    auto cls = evaluate_class_il(net, {&t1, &t2});
    auto tsk = evaluate_task_il(net, {&t1, &t2}, {1, 2});
    CHECK(cls == std::vector<double>{0.5, 1.0});
    CHECK(tsk == std::vector<double>{1.0, 1.0});
}

TEST_CASE("task-il rejects unknown task labels and mismatched sizes") {
    auto net = make_mlp_net(4, {}, 2);
    wire(net, 0, 0, 1.0, 1);
    wire(net, 1, 1, 1.0, 1);
    TaskData t1 = one_hot_task({0, 1}, 4);
    CHECK_THROWS_AS(evaluate_task_il(net, {&t1}, {9}), LabelDomainError);
    CHECK_THROWS_AS(evaluate_task_il(net, {&t1}, {1, 2}), ConsistencyError);
}

TEST_CASE("single-task run has no backward-transfer value") {
    auto bench = synth_bench(1, 3);
    auto out = run_sequence(kSynthArch, bench, MethodSpec{}, synth_alloc(kSynthArch), synth_train(), 5);
    CHECK(!out.record.failed);
    REQUIRE(out.record.class_il.rows.size() == 1);
    CHECK(!bwt(out.record.class_il).has_value());
    CHECK(out.record.la_entries.size() == 1);
}

TEST_CASE("five-task run: shapes, diagonal quality, task-il dominance") {
    auto bench = synth_bench(5, 7);
    auto out = run_sequence(kSynthArch, bench, MethodSpec{}, synth_alloc(kSynthArch), synth_train(), 11);
    REQUIRE(!out.record.failed);
    REQUIRE(out.record.class_il.rows.size() == 5);
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(out.record.class_il.rows[j].size() == j + 1);
        CHECK(out.record.task_il.rows[j].size() == j + 1);
        for (std::size_t i = 0; i <= j; ++i)
            CHECK(out.record.task_il.rows[j][i] >= out.record.class_il.rows[j][i]);
    }
    REQUIRE(out.record.la_entries.size() == 5);
    double diag = 0.0, task_diag = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(out.record.la_entries[i] == out.record.class_il.rows[i][i]);
        diag += out.record.la_entries[i];
        task_diag += out.record.task_il.rows[i][i];
    }
    // task-labeled evaluation learns the separable gaussians nearly perfectly;
    // the all-units diagonal sits above its ~0.23 chance level
    CHECK(task_diag / 5.0 > 0.85);
    CHECK(diag / 5.0 > 0.35);
    CHECK(out.record.params > 0);
    CHECK(out.record.params == out.net.param_count());
    CHECK(out.record.cost.ratio() > 0.0);
    CHECK(out.record.cost.ratio() < 1.0);
    CHECK(out.record.task_logs.size() == 5);
}

TEST_CASE("output rows of different tasks never share a source neuron") {
    auto bench = synth_bench(5, 9);
    auto out = run_sequence(kSynthArch, bench, MethodSpec{}, synth_alloc(kSynthArch), synth_train(), 13);
    REQUIRE(!out.record.failed);
    const int last = out.net.num_edge_layers() - 1;
    const auto& el = out.net.edge_layer(last);
    std::vector<std::set<int>> sources_by_task(6);
    for (std::size_t i = 0; i < el.count(); ++i) {
        const int task = out.net.task_of_output_unit(el.tgt[i]);
        sources_by_task[static_cast<std::size_t>(task)].insert(el.src[i]);
    }
    for (int a = 1; a <= 5; ++a)
        for (int b = a + 1; b <= 5; ++b)
            for (int s : sources_by_task[static_cast<std::size_t>(a)])
                CHECK(!sources_by_task[static_cast<std::size_t>(b)].count(s));
}

TEST_CASE("afaf and per-layer allocation agree bit-for-bit before reuse begins") {
    auto bench = synth_bench(4, 21, /*reuse_start=*/3);
    MethodSpec afaf_m;
    MethodSpec space_m;
    space_m.mode = AllocationMode::Spacenet;
    auto a = run_sequence(kSynthArch, bench, afaf_m, synth_alloc(kSynthArch), synth_train(), 17);
    auto s = run_sequence(kSynthArch, bench, space_m, synth_alloc(kSynthArch), synth_train(), 17);
    REQUIRE(!a.record.failed);
    REQUIRE(!s.record.failed);
    // tasks 1 and 2 precede reuse_start_task and train identically in both arms
    CHECK(a.net.weights_hash({1}) == s.net.weights_hash({1}));
    CHECK(a.net.weights_hash({1, 2}) == s.net.weights_hash({1, 2}));
    CHECK(a.record.class_il.rows[0] == s.record.class_il.rows[0]);
    CHECK(a.record.class_il.rows[1] == s.record.class_il.rows[1]);
    // from task 3 on the arms diverge
    CHECK(a.net.weights_hash({3}) != s.net.weights_hash({3}));
}

TEST_CASE("capacity exhaustion yields a partial record, not a throw") {
    auto bench = synth_bench(5, 25);
    Architecture tiny = Architecture::mlp(16, {8, 8}, 1);
    AllocationConfig cfg = synth_alloc(tiny);
    cfg.alloc_fraction.assign(4, 0.5);
    cfg.alloc_fraction[0] = 1.0;
    auto out = run_sequence(tiny, bench, MethodSpec{}, cfg, synth_train(), 3);
    CHECK(out.record.failed);
    CHECK(out.record.failed_task >= 2);
    CHECK(out.record.failed_task <= 5);
    CHECK(!out.record.failure.empty());
    CHECK(out.record.class_il.rows.size() ==
          static_cast<std::size_t>(out.record.failed_task - 1));
}

TEST_CASE("observer sees every task in order with the matching plan") {
    struct Probe : RunObserver {
        std::vector<int> tasks;
        void after_task(int task_id, const NetworkState&, const NeuronLedger& ledger,
                        const AllocationPlan& plan) override {
            CHECK(plan.task_id == task_id);
            // the new output units are fixed once the task is done
            for (int u : plan.new_output_units)
                CHECK(ledger.is_fixed(ledger.num_layers() - 1, u));
            tasks.push_back(task_id);
        }
    } probe;
    auto bench = synth_bench(3, 2);
    auto out = run_sequence(kSynthArch, bench, MethodSpec{}, synth_alloc(kSynthArch), synth_train(), 2,
                            &probe);
    REQUIRE(!out.record.failed);
    CHECK(probe.tasks == std::vector<int>{1, 2, 3});
}

TEST_CASE("reruns with one seed are identical; different seeds differ") {
    auto bench = synth_bench(3, 6);
    auto a = run_sequence(kSynthArch, bench, MethodSpec{}, synth_alloc(kSynthArch), synth_train(), 41);
    auto b = run_sequence(kSynthArch, bench, MethodSpec{}, synth_alloc(kSynthArch), synth_train(), 41);
    auto c = run_sequence(kSynthArch, bench, MethodSpec{}, synth_alloc(kSynthArch), synth_train(), 42);
    CHECK(a.record.class_il.rows == b.record.class_il.rows);
    CHECK(a.net.weights_hash({1, 2, 3}) == b.net.weights_hash({1, 2, 3}));
    CHECK(a.net.weights_hash({1, 2, 3}) != c.net.weights_hash({1, 2, 3}));
}
