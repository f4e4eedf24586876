#include "afaf/serialize.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "afaf/error.hpp"
#include "afaf/metrics.hpp"

static_assert(std::endian::native == std::endian::little, "snapshot format assumes little-endian");

namespace afaf {

std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

json plan_to_json(const AllocationPlan& plan) {
    json j;
    j["task_id"] = plan.task_id;
    j["first_edge_layer"] = plan.first_edge_layer;
    j["fix_all_output_adjacent"] = plan.fix_all_output_adjacent;
    j["new_output_units"] = plan.new_output_units;
    j["layers"] = json::array();
    for (const auto& la : plan.layers) {
        json l;
        l["free"] = la.free;
        l["candidates"] = la.candidates;
        l["alloc_union"] = la.alloc_union;
        j["layers"].push_back(std::move(l));
    }
    j["edges"] = json::array();
    for (const auto& set : plan.edges) {
        json e;
        e["edge_layer"] = set.edge_layer;
        e["src"] = set.src;
        e["tgt"] = set.tgt;
        j["edges"].push_back(std::move(e));
    }
    return j;
}

namespace {

json matrix_to_json(const AccuracyMatrix& m) {
    json rows = json::array();
    for (const auto& r : m.rows) rows.push_back(r);
    return rows;
}

AccuracyMatrix matrix_from_json(const json& j) {
    AccuracyMatrix m;
    for (const auto& r : j) m.rows.push_back(r.get<std::vector<double>>());
    return m;
}

}  // namespace

json record_to_json(const RunRecord& rec) {
    json j;
    j["schema_version"] = 1;
    j["method"] = rec.method;
    j["benchmark"] = rec.benchmark;
    j["seed"] = rec.seed;
    j["reuse_start_task"] = rec.reuse_start_task;
    j["class_il"] = matrix_to_json(rec.class_il);
    j["task_il"] = matrix_to_json(rec.task_il);
    j["la_entries"] = rec.la_entries;
    j["params"] = rec.params;
    json cost;
    cost["dense_flops"] = rec.cost.dense_flops;
    cost["sparse_flops"] = rec.cost.sparse_flops;
    cost["flops_ratio"] = rec.cost.ratio();
    cost["density_per_layer"] = rec.cost.density_per_layer;
    j["cost"] = std::move(cost);
    j["task_logs"] = json::array();
    for (const auto& log : rec.task_logs) {
        json epochs = json::array();
        for (const auto& e : log.epochs) {
            json ej;
            ej["epoch"] = e.epoch;
            ej["loss"] = e.loss;
            ej["train_accuracy"] = e.train_accuracy;
            ej["dropped"] = e.dropped;
            ej["grown"] = e.grown;
            ej["shortfall"] = e.shortfall;
            epochs.push_back(std::move(ej));
        }
        j["task_logs"].push_back(std::move(epochs));
    }
    j["failed"] = rec.failed;
    j["failed_task"] = rec.failed_task;
    j["failure"] = rec.failure;
    j["notes"] = rec.notes;
    j["snapshot"] = rec.snapshot;
    j["wall_time_seconds"] = rec.wall_time_seconds;
    return j;
}

RunRecord record_from_json(const json& j) {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1)
        throw FormatError("unsupported run record schema");
    RunRecord rec;
    rec.method = j.at("method").get<std::string>();
    rec.benchmark = j.at("benchmark").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.reuse_start_task = j.at("reuse_start_task").get<int>();
    rec.class_il = matrix_from_json(j.at("class_il"));
    rec.task_il = matrix_from_json(j.at("task_il"));
    rec.la_entries = j.at("la_entries").get<std::vector<double>>();
    rec.params = j.at("params").get<std::int64_t>();
    const auto& cost = j.at("cost");
    rec.cost.dense_flops = cost.at("dense_flops").get<double>();
    rec.cost.sparse_flops = cost.at("sparse_flops").get<double>();
    rec.cost.density_per_layer = cost.at("density_per_layer").get<std::vector<double>>();
    for (const auto& epochs : j.at("task_logs")) {
        TrainLog log;
        for (const auto& ej : epochs) {
            EpochLog e;
            e.epoch = ej.at("epoch").get<int>();
            e.loss = ej.at("loss").get<double>();
            e.train_accuracy = ej.at("train_accuracy").get<double>();
            e.dropped = ej.at("dropped").get<int>();
            e.grown = ej.at("grown").get<int>();
            e.shortfall = ej.at("shortfall").get<int>();
            log.total_shortfall += e.shortfall;
            log.epochs.push_back(e);
        }
        rec.task_logs.push_back(std::move(log));
    }
    rec.failed = j.at("failed").get<bool>();
    rec.failed_task = j.at("failed_task").get<int>();
    rec.failure = j.at("failure").get<std::string>();
    rec.notes = j.at("notes").get<std::string>();
    rec.snapshot = j.at("snapshot").get<std::string>();
    rec.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    return rec;
}

RunRecord load_record(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ArtifactError("cannot open run record " + path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw FormatError("bad run record " + path + ": " + e.what());
    }
    return record_from_json(j);
}

std::string matrix_to_csv(const AccuracyMatrix& m) {
    std::ostringstream out;
    out << "after_task";
    for (int i = 1; i <= m.num_tasks(); ++i) out << ",task_" << i;
    out << "\n";
    for (int r = 0; r < m.num_tasks(); ++r) {
        out << r + 1;
        for (int c = 0; c < m.num_tasks(); ++c) {
            out << ",";
            if (c <= r) out << fmt_double(m.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
        }
        out << "\n";
    }
    return out.str();
}

AccuracyMatrix matrix_from_csv(const std::string& csv) {
    AccuracyMatrix m;
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty accuracy csv");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        bool first = true;
        while (std::getline(ls, cell, ',')) {
            if (first) {
                first = false;
                continue;
            }
            if (cell.empty()) continue;
            row.push_back(std::stod(cell));
        }
        m.rows.push_back(std::move(row));
    }
    m.validate();
    return m;
}

std::string train_log_jsonl(const std::vector<TrainLog>& task_logs) {
    std::string out;
    for (std::size_t t = 0; t < task_logs.size(); ++t)
        for (const auto& e : task_logs[t].epochs) {
            json j;
            j["task"] = t + 1;
            j["epoch"] = e.epoch;
            j["loss"] = e.loss;
            j["train_accuracy"] = e.train_accuracy;
            j["dropped"] = e.dropped;
            j["grown"] = e.grown;
            j["shortfall"] = e.shortfall;
            out += j.dump();
            out += "\n";
        }
    return out;
}

void append_metrics_csv(const std::string& path, const RunRecord& rec) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream f(path, std::ios::app);
    if (!f) throw ArtifactError("cannot open metrics csv " + path);
    if (fresh) f << "method,benchmark,seed,ACC,BWT,LA,params,flops_ratio\n";
    const auto b = bwt(rec.class_il);
    // partial runs can end before reuse_start_task; clamp the LA window
    const int la_start = std::min(rec.reuse_start_task, rec.class_il.num_tasks());
    f << rec.method << "," << rec.benchmark << "," << rec.seed << "," << fmt_double(acc(rec.class_il))
      << "," << (b ? fmt_double(*b) : "") << ","
      << fmt_double(la(rec.class_il, la_start)) << "," << rec.params << ","
      << fmt_double(rec.cost.ratio()) << "\n";
}

// ---------------------------------------------------------------------------
// snapshot container

namespace {

constexpr char kMagic[4] = {'A', 'F', 'S', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw FormatError("truncated snapshot");
    return v;
}

}  // namespace

void save_snapshot(const std::string& path, const NetworkState& net) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ArtifactError("cannot write snapshot " + path);
    f.write(kMagic, 4);
    put<std::uint32_t>(f, kVersion);

    const Architecture& arch = net.arch();
    put<std::int32_t>(f, arch.input().channels);
    put<std::int32_t>(f, arch.input().height);
    put<std::int32_t>(f, arch.input().width);
    put<std::int32_t>(f, arch.num_layers());
    for (const auto& l : arch.layers()) {
        put<std::int32_t>(f, l.width);
        put<std::uint8_t>(f, l.conv ? 1 : 0);
        put<std::int32_t>(f, l.h);
        put<std::int32_t>(f, l.w);
        put<std::uint8_t>(f, l.pooled ? 1 : 0);
        put<double>(f, l.dropout);
        put<std::uint8_t>(f, l.act == Activation::Rectifier ? 1 : 0);
        put<std::int32_t>(f, l.kernel);
    }

    put<std::int32_t>(f, net.num_output_units());
    for (int u = 0; u < net.num_output_units(); ++u) {
        put<std::int32_t>(f, net.class_for_output_unit(u));
        put<std::int32_t>(f, net.task_of_output_unit(u));
    }

    // per-task edge lists, tasks and layers in ascending order
    std::map<int, std::vector<std::pair<int, std::size_t>>> by_task;  // task -> (layer, edge idx)
    for (int e = 0; e < net.num_edge_layers(); ++e) {
        const auto& el = net.edge_layer(e);
        for (std::size_t i = 0; i < el.count(); ++i)
            by_task[el.owner[i]].push_back({e, i});
    }
    put<std::int32_t>(f, static_cast<std::int32_t>(by_task.size()));
    for (const auto& [task, refs] : by_task) {
        put<std::int32_t>(f, task);
        put<std::uint64_t>(f, refs.size());
        for (const auto& [e, i] : refs) {
            const auto& el = net.edge_layer(e);
            put<std::int32_t>(f, e);
            put<std::int32_t>(f, el.src[i]);
            put<std::int32_t>(f, el.tgt[i]);
            f.write(reinterpret_cast<const char*>(el.weights.data() + i * el.block_size),
                    static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(el.block_size)));
        }
    }
    if (!f) throw ArtifactError("snapshot write failed: " + path);
}

NetworkState load_snapshot(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ArtifactError("snapshot not found: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad snapshot magic in " + path);
    if (get<std::uint32_t>(f) != kVersion) throw FormatError("unsupported snapshot version");

    InputShape input;
    input.channels = get<std::int32_t>(f);
    input.height = get<std::int32_t>(f);
    input.width = get<std::int32_t>(f);
    const int L = get<std::int32_t>(f);
    if (L < 2 || L > 1024) throw FormatError("implausible layer count in snapshot");
    std::vector<NeuronLayer> layers;
    for (int l = 0; l < L; ++l) {
        NeuronLayer nl;
        nl.width = get<std::int32_t>(f);
        nl.conv = get<std::uint8_t>(f) != 0;
        nl.h = get<std::int32_t>(f);
        nl.w = get<std::int32_t>(f);
        nl.pooled = get<std::uint8_t>(f) != 0;
        nl.pooled_h = nl.pooled ? nl.h / 2 : nl.h;
        nl.pooled_w = nl.pooled ? nl.w / 2 : nl.w;
        nl.dropout = get<double>(f);
        nl.act = get<std::uint8_t>(f) != 0 ? Activation::Rectifier : Activation::Identity;
        nl.kernel = get<std::int32_t>(f);
        layers.push_back(nl);
    }

    const int num_units = get<std::int32_t>(f);
    std::vector<std::pair<int, int>> units;  // (class, task) in unit order
    for (int u = 0; u < num_units; ++u) {
        const int cls = get<std::int32_t>(f);
        const int task = get<std::int32_t>(f);
        units.push_back({cls, task});
    }

    const int final_width = layers.back().width;
    if (final_width != num_units) throw FormatError("snapshot output width / unit table mismatch");
    NetworkState net(Architecture::from_resolved(input, std::move(layers)));

    // replay output growth per consecutive task run
    std::size_t u = 0;
    while (u < units.size()) {
        const int task = units[u].second;
        std::vector<int> class_ids;
        while (u < units.size() && units[u].second == task) class_ids.push_back(units[u++].first);
        net.extend_output(class_ids, task);
    }

    const int num_tasks = get<std::int32_t>(f);
    for (int t = 0; t < num_tasks; ++t) {
        const int task = get<std::int32_t>(f);
        const std::uint64_t n = get<std::uint64_t>(f);
        std::map<int, SparseEdgeSet> by_layer;
        for (std::uint64_t i = 0; i < n; ++i) {
            const int e = get<std::int32_t>(f);
            if (e < 0 || e >= net.num_edge_layers()) throw FormatError("edge layer out of range in snapshot");
            SparseEdgeSet& set = by_layer[e];
            set.edge_layer = e;
            set.owner_task = task;
            set.src.push_back(get<std::int32_t>(f));
            set.tgt.push_back(get<std::int32_t>(f));
            const int block = net.edge_layer(e).block_size;
            std::vector<double> w(static_cast<std::size_t>(block));
            f.read(reinterpret_cast<char*>(w.data()),
                   static_cast<std::streamsize>(sizeof(double) * w.size()));
            if (!f) throw FormatError("truncated snapshot");
            set.weights.insert(set.weights.end(), w.begin(), w.end());
        }
        for (auto& [e, set] : by_layer) net.add_edges(set);
    }
    return net;
}

}  // namespace afaf
