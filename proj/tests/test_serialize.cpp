#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "afaf/error.hpp"
#include "afaf/runner.hpp"
#include "afaf/serialize.hpp"
#include "helpers.hpp"

using namespace afaf;
using namespace afaf::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("afaf-serialize-test-" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunRecord sample_record() {
    RunRecord r;
    r.method = "afaf";
    r.benchmark = "synthetic";
    r.seed = 42;
    r.reuse_start_task = 3;
    r.class_il.rows = {{0.8}, {0.7, 0.6}};
    r.task_il.rows = {{0.9}, {0.85, 0.95}};
    r.la_entries = {0.8, 0.6};
    r.params = 1234;
    r.cost.dense_flops = 1e9;
    r.cost.sparse_flops = 2.5e8;
    r.cost.density_per_layer = {0.25, 0.5};
    TrainLog log;
    EpochLog e;
    e.epoch = 1;
    e.loss = 0.123456789012345;
    e.train_accuracy = 0.75;
    e.dropped = 3;
    e.grown = 2;
    e.shortfall = 1;
    log.epochs.push_back(e);
    r.task_logs = {log, log};
    r.wall_time_seconds = 1.5;
    r.notes = "note";
    r.snapshot = "snap.bin";
    return r;
}

}  // namespace

TEST_CASE("fmt_double round-trips exactly") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678901234567, 0.0})
        CHECK(std::stod(fmt_double(v)) == v);
    CHECK(fmt_double(0.5) == "0.5");
}

TEST_CASE("record json round-trip preserves every field") {
    RunRecord r = sample_record();
    auto j = record_to_json(r);
    RunRecord back = record_from_json(j);
    CHECK(back.method == r.method);
    CHECK(back.benchmark == r.benchmark);
    CHECK(back.seed == r.seed);
    CHECK(back.reuse_start_task == r.reuse_start_task);
    CHECK(back.class_il.rows == r.class_il.rows);
    CHECK(back.task_il.rows == r.task_il.rows);
    CHECK(back.la_entries == r.la_entries);
    CHECK(back.params == r.params);
    CHECK(back.cost.dense_flops == r.cost.dense_flops);
    CHECK(back.cost.sparse_flops == r.cost.sparse_flops);
    CHECK(back.cost.density_per_layer == r.cost.density_per_layer);
    REQUIRE(back.task_logs.size() == 2);
    CHECK(back.task_logs[0].epochs[0].loss == r.task_logs[0].epochs[0].loss);
    CHECK(back.task_logs[0].epochs[0].dropped == 3);
    CHECK(back.failed == r.failed);
    CHECK(back.notes == r.notes);
    CHECK(back.snapshot == r.snapshot);
    CHECK(back.wall_time_seconds == r.wall_time_seconds);

    auto j2 = record_to_json(back);
    CHECK(j.dump(2) == j2.dump(2));  // serialization is deterministic

    json bad = j;
    bad["schema_version"] = 9;
    CHECK_THROWS_AS(record_from_json(bad), FormatError);
}

TEST_CASE("load_record reads a file written by record_to_json") {
    auto dir = temp_dir("rec");
    RunRecord r = sample_record();
    {
        std::ofstream out(dir / "r.json");
        out << record_to_json(r).dump(2) << "\n";
    }
    RunRecord back = load_record((dir / "r.json").string());
    CHECK(back.class_il.rows == r.class_il.rows);
    CHECK_THROWS_AS(load_record((dir / "missing.json").string()), ArtifactError);
}

TEST_CASE("accuracy matrix csv round-trip at full precision") {
    AccuracyMatrix m;
    m.rows = {{1.0 / 3.0}, {0.123456789012345, 2.0 / 3.0}, {0.0, 1.0, 0.987654321098765}};
    std::string csv = matrix_to_csv(m);
    AccuracyMatrix back = matrix_from_csv(csv);
    CHECK(back.rows == m.rows);

    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "after_task,task_1,task_2,task_3");
    std::string row1;
    std::getline(lines, row1);
    CHECK(row1.substr(0, 2) == "1,");
    CHECK(row1.find(",,") != std::string::npos);  // blank above the diagonal
}

TEST_CASE("train log jsonl has one line per epoch with the task index") {
    RunRecord r = sample_record();
    std::string jsonl = train_log_jsonl(r.task_logs);
    std::istringstream lines(jsonl);
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
        auto j = json::parse(line);
        CHECK(j["task"] == n + 1);
        CHECK(j["epoch"] == 1);
        CHECK(j.contains("loss"));
        CHECK(j["dropped"] == 3);
        ++n;
    }
    CHECK(n == 2);
}

TEST_CASE("metrics csv: header once, BWT blank when absent") {
    auto dir = temp_dir("csv");
    const std::string path = (dir / "metrics.csv").string();
    RunRecord r = sample_record();
    append_metrics_csv(path, r);
    RunRecord single = r;
    single.class_il.rows = {{0.8}};
    single.la_entries = {0.8};
    append_metrics_csv(path, single);

    std::ifstream in(path);
    std::string header, l1, l2, extra;
    std::getline(in, header);
    std::getline(in, l1);
    std::getline(in, l2);
    CHECK(!std::getline(in, extra));
    CHECK(header == "method,benchmark,seed,ACC,BWT,LA,params,flops_ratio");
    CHECK(l1.substr(0, 18) == "afaf,synthetic,42,");
    CHECK(l2.find(",,") != std::string::npos);  // undefined BWT stays empty
}

TEST_CASE("snapshot round-trip reproduces forward outputs bit for bit") {
    Rng rng(5);
    auto net = make_mlp_net(6, {12, 10}, 0);
    net.extend_output({0, 1}, 1);
    net.extend_output({5, 7}, 2);
    for (int e = 0; e < net.num_edge_layers(); ++e) {
        add_random_edges(net, e, 0.5, rng, 1);
        add_random_edges(net, e, 0.2, rng, 2);
    }
    auto dir = temp_dir("snap");
    const std::string path = (dir / "net.bin").string();
    save_snapshot(path, net);
    NetworkState back = load_snapshot(path);

    CHECK(back.param_count() == net.param_count());
    CHECK(back.num_output_units() == 4);
    CHECK(back.output_unit_for_class(5) == net.output_unit_for_class(5));
    CHECK(back.task_of_output_unit(3) == net.task_of_output_unit(3));
    CHECK(back.output_units_of_task(2) == net.output_units_of_task(2));

    std::vector<std::vector<double>> batch;
    for (int s = 0; s < 5; ++s) {
        std::vector<double> x(6);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        batch.push_back(std::move(x));
    }
    auto f1 = net.forward(batch, Mode::Eval);
    auto f2 = back.forward(batch, Mode::Eval);
    for (std::size_t i = 0; i < batch.size(); ++i)
        for (std::size_t u = 0; u < 4; ++u) CHECK(f1.logits[i][u] == f2.logits[i][u]);
    CHECK(back.weights_hash({1, 2}) == net.weights_hash({1, 2}));
}

TEST_CASE("snapshot loader rejects bad magic and truncation") {
    auto dir = temp_dir("snapbad");
    {
        std::ofstream out(dir / "bad.bin", std::ios::binary);
        out << "NOPE garbage";
    }
    CHECK_THROWS_AS(load_snapshot((dir / "bad.bin").string()), FormatError);

    auto net = make_mlp_net(4, {5}, 2);
    const std::string path = (dir / "ok.bin").string();
    save_snapshot(path, net);
    const auto size = fs::file_size(path);
    fs::resize_file(path, size - 3);
    CHECK_THROWS_AS(load_snapshot(path), FormatError);
    CHECK_THROWS_AS(load_snapshot((dir / "missing.bin").string()), ArtifactError);
}

TEST_CASE("plan json exposes layers and edge sets") {
    auto net = make_mlp_net(4, {6, 6}, 0);
    auto units = net.extend_output({0}, 2);
    NeuronLedger ledger(net.arch());
    ledger.extend_layer(3, 1);
    AllocationConfig cfg;
    cfg.l_reuse = 2;
    cfg.candidate_fraction = 0.4;
    cfg.epsilon.assign(3, 0.5);
    cfg.alloc_fraction.assign(4, 0.6667);
    cfg.fix_fraction.assign(4, 0.3);
    std::vector<std::vector<double>> data{{0.2, 0.4, 0.6, 0.8}};
    std::vector<ClassDatasetView> views{{0, &data}};
    Rng rng(3);
    auto plan = build_allocation(net, ledger, cfg, 2, views, units, rng);
    auto j = plan_to_json(plan);
    CHECK(j["task_id"] == 2);
    CHECK(j["first_edge_layer"] == 1);
    REQUIRE(j.contains("layers"));
    REQUIRE(j.contains("edges"));
    CHECK(j["edges"].size() == 3);
    std::size_t total = 0;
    for (const auto& e : j["edges"]) total += e["src"].size();
    CHECK(total == plan.edge_count());
}
