// Experiment front end: run, sweep, report, dump-activations.
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "afaf/data.hpp"
#include "afaf/error.hpp"
#include "afaf/metrics.hpp"
#include "afaf/runner.hpp"
#include "afaf/serialize.hpp"

namespace fs = std::filesystem;
using afaf::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw afaf::ConfigError(where + " must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw afaf::ConfigError(where + ": unknown key '" + k + "'");
}

// ---------------------------------------------------------------------------
// config schema

struct ExperimentConfig {
    std::string benchmark_name;
    afaf::BenchmarkOptions bench_opts;
    std::optional<int> reuse_start_override;
    afaf::Architecture arch = afaf::Architecture::mlp(1, {}, 1);
    std::vector<afaf::MethodSpec> methods;
    afaf::AllocationConfig alloc;
    afaf::TrainConfig train;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "out";
    bool save_snapshot = true;
};

afaf::Architecture parse_architecture(const json& j) {
    check_keys(j, "architecture", {"type", "input", "hidden", "hidden_dropout", "layers"});
    const std::string type = j.at("type").get<std::string>();
    afaf::InputShape input{3, 32, 32};
    if (j.contains("input")) {
        const auto v = j.at("input").get<std::vector<int>>();
        if (v.size() != 3) throw afaf::ConfigError("architecture.input must be [channels, height, width]");
        input = {v[0], v[1], v[2]};
    }
    if (type == "mlp") {
        const auto hidden = j.at("hidden").get<std::vector<int>>();
        const double drop = j.value("hidden_dropout", 0.0);
        return afaf::Architecture::mlp(input.size(), hidden, 1, drop);
    }
    if (type != "conv") throw afaf::ConfigError("architecture.type must be 'mlp' or 'conv'");
    std::vector<afaf::LayerSpec> specs;
    for (const auto& l : j.at("layers")) {
        check_keys(l, "architecture.layers[]", {"kind", "units", "kernel", "rate"});
        const std::string kind = l.at("kind").get<std::string>();
        if (kind == "conv")
            specs.push_back(afaf::LayerSpec::conv(l.at("units").get<int>(), l.at("kernel").get<int>()));
        else if (kind == "dense")
            specs.push_back(afaf::LayerSpec::dense(l.at("units").get<int>()));
        else if (kind == "max_pool")
            specs.push_back(afaf::LayerSpec::max_pool());
        else if (kind == "dropout")
            specs.push_back(afaf::LayerSpec::dropout(l.at("rate").get<double>()));
        else if (kind == "flatten")
            specs.push_back(afaf::LayerSpec::flatten());
        else
            throw afaf::ConfigError("unknown layer kind '" + kind + "'");
    }
    specs.push_back(afaf::LayerSpec::dense(1, afaf::Activation::Identity));  // grown output
    return afaf::Architecture::build(input, specs);
}

std::string layer_kind_name(const afaf::Architecture& arch, int l) {
    if (l == 0) return "input";
    if (l == arch.num_layers() - 1) return "output_units";
    if (arch.layer(l).conv) return "conv";
    if (l == arch.num_layers() - 2) return "output";  // output-adjacent layer
    return "fc";
}

// A fraction spec is either a per-layer array or a {kind: value} map with
// kinds input/conv/fc/output (output = the layer feeding the classifier).
std::vector<double> neuron_layer_fractions(const json& j, const afaf::Architecture& arch,
                                           const std::string& where, double output_units_value) {
    const int L = arch.num_layers();
    if (j.is_array()) {
        auto v = j.get<std::vector<double>>();
        if (static_cast<int>(v.size()) != L)
            throw afaf::ConfigError(where + " needs one entry per layer (" + std::to_string(L) + ")");
        return v;
    }
    check_keys(j, where, {"input", "conv", "fc", "output"});
    std::vector<double> v(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
        const std::string kind = layer_kind_name(arch, l);
        if (kind == "output_units") {
            v[static_cast<std::size_t>(l)] = output_units_value;
        } else {
            if (!j.contains(kind)) throw afaf::ConfigError(where + " missing '" + kind + "'");
            v[static_cast<std::size_t>(l)] = j.at(kind).get<double>();
        }
    }
    return v;
}

// Edge layers keyed by their source layer; the last edge layer is "output".
std::vector<double> edge_layer_fractions(const json& j, const afaf::Architecture& arch,
                                         const std::string& where) {
    const int E = arch.num_edge_layers();
    if (j.is_array()) {
        auto v = j.get<std::vector<double>>();
        if (static_cast<int>(v.size()) != E)
            throw afaf::ConfigError(where + " needs one entry per edge layer (" + std::to_string(E) + ")");
        return v;
    }
    check_keys(j, where, {"input", "conv", "fc", "output"});
    std::vector<double> v(static_cast<std::size_t>(E));
    for (int e = 0; e < E; ++e) {
        std::string kind;
        if (e == E - 1)
            kind = "output";
        else if (arch.layer(e + 1).conv)
            kind = "conv";
        else
            kind = "fc";
        if (!j.contains(kind)) throw afaf::ConfigError(where + " missing '" + kind + "'");
        v[static_cast<std::size_t>(e)] = j.at(kind).get<double>();
    }
    return v;
}

afaf::MethodSpec parse_method(const json& j) {
    check_keys(j, "methods[]",
               {"mode", "strategy", "without_orthogonal_output", "with_candidates_in_last_layer",
                "reuse_all"});
    afaf::MethodSpec m;
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "afaf")
        m.mode = afaf::AllocationMode::Afaf;
    else if (mode == "spacenet")
        m.mode = afaf::AllocationMode::Spacenet;
    else
        throw afaf::ConfigError("method mode must be 'afaf' or 'spacenet'");
    const std::string strat = j.value("strategy", "highest");
    if (strat == "highest")
        m.strategy = afaf::CandidateStrategy::Highest;
    else if (strat == "random")
        m.strategy = afaf::CandidateStrategy::Random;
    else if (strat == "lowest")
        m.strategy = afaf::CandidateStrategy::Lowest;
    else
        throw afaf::ConfigError("candidate strategy must be highest|random|lowest");
    m.without_orthogonal_output = j.value("without_orthogonal_output", false);
    m.with_candidates_in_last_layer = j.value("with_candidates_in_last_layer", false);
    m.reuse_all = j.value("reuse_all", false);
    m.validate();
    return m;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw afaf::ConfigError("cannot open config " + path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw afaf::ConfigError(std::string("config parse error: ") + e.what());
    }
    check_keys(j, "config",
               {"schema_version", "benchmark", "architecture", "methods", "allocation", "train",
                "seeds", "output_dir", "save_snapshot"});
    if (j.at("schema_version").get<int>() != 1)
        throw afaf::ConfigError("unsupported config schema_version");

    ExperimentConfig cfg;
    const json& b = j.at("benchmark");
    check_keys(b, "benchmark",
               {"name", "data_root", "samples_per_class", "test_samples_per_class",
                "generate_if_missing", "generate_seed", "reuse_start_task", "synthetic"});
    cfg.benchmark_name = b.at("name").get<std::string>();
    cfg.bench_opts.data_root = b.value("data_root", std::string("data"));
    if (const char* env = std::getenv("AFAF_DATA_ROOT")) cfg.bench_opts.data_root = env;
    cfg.bench_opts.samples_per_class = b.value("samples_per_class", 0);
    cfg.bench_opts.test_samples_per_class = b.value("test_samples_per_class", 0);
    cfg.bench_opts.generate_if_missing = b.value("generate_if_missing", false);
    cfg.bench_opts.generate_seed = b.value("generate_seed", std::uint64_t{7});
    if (b.contains("reuse_start_task")) cfg.reuse_start_override = b.at("reuse_start_task").get<int>();
    if (b.contains("synthetic")) {
        const json& s = b.at("synthetic");
        check_keys(s, "benchmark.synthetic",
                   {"tasks", "classes_per_task", "dim", "separation", "similarity", "samples",
                    "test_samples", "seed", "reuse_start_task"});
        cfg.bench_opts.synth_tasks = s.value("tasks", 5);
        cfg.bench_opts.synth_classes_per_task = s.value("classes_per_task", 2);
        cfg.bench_opts.synth_dim = s.value("dim", 16);
        cfg.bench_opts.synth_separation = s.value("separation", 4.0);
        cfg.bench_opts.synth_similarity = s.value("similarity", 0.0);
        cfg.bench_opts.synth_samples = s.value("samples", 128);
        cfg.bench_opts.synth_test_samples = s.value("test_samples", 64);
        cfg.bench_opts.synth_seed = s.value("seed", std::uint64_t{1});
        cfg.bench_opts.synth_reuse_start_task = s.value("reuse_start_task", 3);
    }

    cfg.arch = parse_architecture(j.at("architecture"));

    for (const auto& m : j.at("methods")) cfg.methods.push_back(parse_method(m));
    if (cfg.methods.empty()) throw afaf::ConfigError("at least one method required");

    const json& a = j.at("allocation");
    check_keys(a, "allocation",
               {"l_reuse", "candidate_fraction", "epsilon", "alloc_fraction", "fix_fraction"});
    cfg.alloc.l_reuse = a.at("l_reuse").get<int>();
    cfg.alloc.candidate_fraction = a.value("candidate_fraction", 0.3);
    cfg.alloc.epsilon = edge_layer_fractions(a.at("epsilon"), cfg.arch, "allocation.epsilon");
    cfg.alloc.alloc_fraction =
        neuron_layer_fractions(a.at("alloc_fraction"), cfg.arch, "allocation.alloc_fraction", 1.0);
    cfg.alloc.fix_fraction =
        neuron_layer_fractions(a.at("fix_fraction"), cfg.arch, "allocation.fix_fraction", 1.0);
    cfg.alloc.validate(cfg.arch);
    const int L = cfg.arch.num_layers();
    if (cfg.alloc.l_reuse > L - 2)
        throw afaf::ConfigError("l_reuse must lie in [2, L-2] (reuse_all is a method flag)");

    const json& t = j.at("train");
    check_keys(t, "train",
               {"epochs", "batch_size", "learning_rate", "zeta", "cycle_period",
                "loss_over_all_seen", "parallel"});
    cfg.train.epochs = t.value("epochs", 10);
    cfg.train.batch_size = t.value("batch_size", 64);
    cfg.train.learning_rate = t.value("learning_rate", 0.1);
    cfg.train.zeta = t.value("zeta", 0.3);
    cfg.train.cycle_period = t.value("cycle_period", 1);
    cfg.train.loss_over_all_seen = t.value("loss_over_all_seen", false);
    cfg.train.exec = t.value("parallel", false) ? afaf::Exec::Parallel : afaf::Exec::Serial;
    cfg.train.validate();

    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.seeds.empty()) throw afaf::ConfigError("seeds must be nonempty");
    cfg.output_dir = j.value("output_dir", std::string("out"));
    cfg.save_snapshot = j.value("save_snapshot", true);
    return cfg;
}

afaf::TaskSequence make_sequence(const ExperimentConfig& cfg) {
    auto [spec, seq] = afaf::build_benchmark(cfg.benchmark_name, cfg.bench_opts);
    if (cfg.reuse_start_override) seq.reuse_start_task = *cfg.reuse_start_override;
    return seq;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw afaf::ArtifactError("cannot write " + path);
    f << text;
}

// ---------------------------------------------------------------------------
// run

int cmd_run(const std::string& config_path, const std::string& out_override, bool overwrite) {
    ExperimentConfig cfg = parse_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    const auto seq = make_sequence(cfg);
    fs::create_directories(cfg.output_dir);

    // refuse to clobber existing records unless asked
    std::vector<std::string> stems;
    for (const auto& m : cfg.methods)
        for (auto seed : cfg.seeds)
            stems.push_back(cfg.output_dir + "/" + m.name() + "-s" + std::to_string(seed));
    if (!overwrite)
        for (const auto& s : stems)
            if (fs::exists(s + ".json"))
                throw afaf::ArtifactError(s + ".json exists; pass --overwrite to replace it");

    std::size_t idx = 0;
    for (const auto& m : cfg.methods)
        for (auto seed : cfg.seeds) {
            const std::string& stem = stems[idx++];
            auto out = afaf::run_sequence(cfg.arch, seq, m, cfg.alloc, cfg.train, seed);
            if (cfg.save_snapshot) {
                afaf::save_snapshot(stem + "-snapshot.bin", out.net);
                out.record.snapshot = fs::path(stem + "-snapshot.bin").filename().string();
            }
            write_text(stem + ".json", afaf::record_to_json(out.record).dump(2) + "\n");
            write_text(stem + "-class-il.csv", afaf::matrix_to_csv(out.record.class_il));
            write_text(stem + "-task-il.csv", afaf::matrix_to_csv(out.record.task_il));
            write_text(stem + "-train.jsonl", afaf::train_log_jsonl(out.record.task_logs));
            afaf::append_metrics_csv(cfg.output_dir + "/metrics.csv", out.record);
            std::cout << out.record.method << " seed " << seed << ": ACC "
                      << afaf::fmt_double(afaf::acc(out.record.class_il))
                      << (out.record.failed ? " (failed at task " + std::to_string(out.record.failed_task) + ")"
                                            : "")
                      << "\n";
        }
    return 0;
}

// ---------------------------------------------------------------------------
// sweep

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::vector<double>& values, const std::string& out_override, bool overwrite) {
    if (axis != "l_reuse" && axis != "candidate-fraction" && axis != "density")
        throw afaf::ConfigError("sweep axis must be l_reuse | candidate-fraction | density");
    ExperimentConfig base = parse_config(config_path);
    if (!out_override.empty()) base.output_dir = out_override;
    const auto seq = make_sequence(base);
    fs::create_directories(base.output_dir);
    const std::string out_csv = base.output_dir + "/sweep-" + axis + ".csv";
    if (!overwrite && fs::exists(out_csv))
        throw afaf::ArtifactError(out_csv + " exists; pass --overwrite to replace it");

    struct Point {
        double value;
        double acc, la;
        std::optional<double> bwt;
    };
    std::vector<Point> points;
    const afaf::MethodSpec& method = base.methods.front();

    for (double v : values) {
        ExperimentConfig cfg = base;
        if (axis == "l_reuse")
            cfg.alloc.l_reuse = static_cast<int>(v);
        else if (axis == "candidate-fraction")
            cfg.alloc.candidate_fraction = v;
        else
            for (auto& e : cfg.alloc.epsilon) e = v;
        try {
            cfg.alloc.validate(cfg.arch);
            if (axis == "l_reuse" && cfg.alloc.l_reuse > cfg.arch.num_layers() - 2)
                throw afaf::ConstraintError("l_reuse outside [2, L-2]");
        } catch (const afaf::Error& e) {
            std::cerr << "sweep: skipping " << axis << "=" << afaf::fmt_double(v) << ": " << e.what()
                      << "\n";
            continue;
        }
        double acc_sum = 0, la_sum = 0, bwt_sum = 0;
        bool has_bwt = true;
        for (auto seed : cfg.seeds) {
            auto out = afaf::run_sequence(cfg.arch, seq, method, cfg.alloc, cfg.train, seed);
            acc_sum += afaf::acc(out.record.class_il);
            la_sum += afaf::la(out.record.class_il, out.record.reuse_start_task);
            if (auto b = afaf::bwt(out.record.class_il))
                bwt_sum += *b;
            else
                has_bwt = false;
        }
        const double n = static_cast<double>(cfg.seeds.size());
        points.push_back({v, acc_sum / n, la_sum / n,
                          has_bwt ? std::optional<double>(bwt_sum / n) : std::nullopt});
    }
    if (points.empty()) throw afaf::ConfigError("no valid sweep points");

    auto normalize = [&](auto getter) {
        double lo = 1e300, hi = -1e300;
        for (const auto& p : points) {
            const double v = getter(p);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        std::vector<double> norm;
        for (const auto& p : points)
            norm.push_back(hi > lo ? (getter(p) - lo) / (hi - lo) : 1.0);
        return norm;
    };
    auto acc_n = normalize([](const Point& p) { return p.acc; });
    auto la_n = normalize([](const Point& p) { return p.la; });
    const bool all_bwt = std::all_of(points.begin(), points.end(),
                                     [](const Point& p) { return p.bwt.has_value(); });
    std::vector<double> bwt_n;
    if (all_bwt) bwt_n = normalize([](const Point& p) { return *p.bwt; });

    std::ostringstream csv;
    csv << "value,ACC,BWT,LA,ACC_norm,BWT_norm,LA_norm\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        csv << afaf::fmt_double(p.value) << "," << afaf::fmt_double(p.acc) << ","
            << (p.bwt ? afaf::fmt_double(*p.bwt) : "") << "," << afaf::fmt_double(p.la) << ","
            << afaf::fmt_double(acc_n[i]) << "," << (all_bwt ? afaf::fmt_double(bwt_n[i]) : "")
            << "," << afaf::fmt_double(la_n[i]) << "\n";
    }
    write_text(out_csv, csv.str());
    std::cout << csv.str();
    return 0;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const std::vector<std::string>& record_paths, const std::string& out_dir,
               bool overwrite) {
    std::vector<afaf::RunRecord> records;
    for (const auto& p : record_paths) records.push_back(afaf::load_record(p));
    std::set<std::string> benchmarks;
    for (const auto& r : records) benchmarks.insert(r.benchmark);
    if (benchmarks.size() > 1) {
        std::string msg = "cannot mix benchmarks in one report:";
        for (const auto& b : benchmarks) msg += " " + b;
        throw afaf::GroupingError(msg);
    }

    struct Agg {
        std::vector<double> acc, la, params, ratio;
        std::vector<std::optional<double>> bwt;
    };
    std::map<std::string, Agg> by_method;
    for (const auto& r : records) {
        Agg& a = by_method[r.method];
        a.acc.push_back(afaf::acc(r.class_il));
        a.la.push_back(afaf::la(r.class_il, r.reuse_start_task));
        a.bwt.push_back(afaf::bwt(r.class_il));
        a.params.push_back(static_cast<double>(r.params));
        a.ratio.push_back(r.cost.ratio());
    }
    auto mean_std = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return std::pair<double, double>{m, std::sqrt(s / static_cast<double>(v.size()))};
    };

    std::ostringstream csv;
    csv << "method,benchmark,n,ACC_mean,ACC_std,BWT_mean,BWT_std,LA_mean,LA_std,params_mean,"
           "flops_ratio_mean\n";
    std::cout << "benchmark: " << *benchmarks.begin() << "\n";
    for (const auto& [method, a] : by_method) {
        auto [am, as] = mean_std(a.acc);
        auto [lm, ls] = mean_std(a.la);
        auto [pm, ps] = mean_std(a.params);
        auto [rm, rs] = mean_std(a.ratio);
        const bool has_bwt =
            std::all_of(a.bwt.begin(), a.bwt.end(), [](const auto& b) { return b.has_value(); });
        std::string bm = "n/a", bs = "";
        if (has_bwt) {
            std::vector<double> bv;
            for (const auto& b : a.bwt) bv.push_back(*b);
            auto [m, s] = mean_std(bv);
            bm = afaf::fmt_double(m);
            bs = afaf::fmt_double(s);
        }
        csv << method << "," << *benchmarks.begin() << "," << a.acc.size() << ","
            << afaf::fmt_double(am) << "," << afaf::fmt_double(as) << "," << (has_bwt ? bm : "")
            << "," << bs << "," << afaf::fmt_double(lm) << "," << afaf::fmt_double(ls) << ","
            << afaf::fmt_double(pm) << "," << afaf::fmt_double(rm) << "\n";
        std::cout << "  " << method << ": ACC " << afaf::fmt_double(am * 100) << " +/- "
                  << afaf::fmt_double(as * 100) << "  BWT " << (has_bwt ? bm : "n/a") << "  LA "
                  << afaf::fmt_double(lm * 100) << " (n=" << a.acc.size() << ")\n";
        (void)ps;
        (void)rs;
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const std::string path = out_dir + "/report.csv";
        if (!overwrite && fs::exists(path))
            throw afaf::ArtifactError(path + " exists; pass --overwrite to replace it");
        write_text(path, csv.str());
    } else {
        std::cout << csv.str();
    }
    return 0;
}

// ---------------------------------------------------------------------------
// dump-activations

int cmd_dump_activations(const std::string& record_path, int layer, const std::vector<int>& classes,
                         const std::string& data_root) {
    afaf::RunRecord rec = afaf::load_record(record_path);
    if (rec.snapshot.empty()) throw afaf::ArtifactError("run record has no network snapshot");
    fs::path snap = fs::path(record_path).parent_path() / rec.snapshot;
    if (!fs::exists(snap)) throw afaf::ArtifactError("snapshot not found: " + snap.string());
    afaf::NetworkState net = afaf::load_snapshot(snap.string());

    afaf::BenchmarkOptions opts;
    opts.data_root = data_root;
    if (const char* env = std::getenv("AFAF_DATA_ROOT")) opts.data_root = env;
    opts.generate_if_missing = true;
    auto [spec, seq] = afaf::build_benchmark(rec.benchmark, opts);

    if (layer < 1 || layer > net.arch().num_layers())
        throw afaf::ConfigError("layer must lie in [1, L] (1-based)");
    const int l0 = layer - 1;

    std::cout << "class";
    for (int n = 0; n < net.arch().layer(l0).width; ++n) std::cout << ",n" << n;
    std::cout << "\n";
    for (int cls : classes) {
        const std::vector<std::vector<double>>* samples = nullptr;
        for (const auto& task : seq.tasks)
            for (const auto& cd : task.train)
                if (cd.class_id == cls) samples = &cd.samples;
        if (!samples) throw afaf::LabelDomainError("class " + std::to_string(cls) + " not in benchmark");
        auto avg = afaf::average_class_activation(net, *samples);
        std::cout << cls;
        for (double v : avg[static_cast<std::size_t>(l0)]) std::cout << "," << afaf::fmt_double(v);
        std::cout << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse continual-learning experiment runner"};
    app.require_subcommand(1);

    std::string config_path, out_dir, record_path, axis, data_root = "data";
    std::vector<std::string> record_paths;
    std::vector<double> values;
    std::vector<int> classes;
    int layer = 1;
    bool overwrite = false;
    app.add_flag("--overwrite", overwrite, "replace existing output files");
    app.add_option("--out", out_dir, "output directory override");

    auto* run = app.add_subcommand("run", "run every (method, seed) of a config");
    run->add_option("config", config_path)->required();

    auto* sweep = app.add_subcommand("sweep", "sweep one allocation axis");
    sweep->add_option("config", config_path)->required();
    sweep->add_option("--axis", axis, "l_reuse | candidate-fraction | density")->required();
    sweep->add_option("--values", values)->required()->delimiter(',');

    auto* report = app.add_subcommand("report", "aggregate run records");
    report->add_option("records", record_paths)->required();

    auto* dump = app.add_subcommand("dump-activations", "per-class average activations of a layer");
    dump->add_option("record", record_path)->required();
    dump->add_option("--layer", layer, "1-based layer index")->required();
    dump->add_option("--classes", classes)->required()->delimiter(',');
    dump->add_option("--data-root", data_root, "dataset root for rebuilding the benchmark");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, overwrite);
        if (sweep->parsed()) return cmd_sweep(config_path, axis, values, out_dir, overwrite);
        if (report->parsed()) return cmd_report(record_paths, out_dir, overwrite);
        if (dump->parsed()) return cmd_dump_activations(record_path, layer, classes, data_root);
    } catch (const afaf::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const afaf::ConstraintError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
