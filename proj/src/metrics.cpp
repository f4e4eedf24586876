#include "afaf/metrics.hpp"

#include <cmath>

#include "afaf/error.hpp"

namespace afaf {

void AccuracyMatrix::validate() const {
    if (rows.empty()) throw ConsistencyError("accuracy matrix needs at least one row");
    for (std::size_t j = 0; j < rows.size(); ++j) {
        if (rows[j].size() != j + 1)
            throw ConsistencyError("accuracy matrix is not lower-triangular at row " + std::to_string(j));
        for (double v : rows[j])
            if (v < 0.0 || v > 1.0) throw ConsistencyError("accuracy entries must lie in [0,1]");
    }
}

double acc(const AccuracyMatrix& m) {
    m.validate();
    const auto& last = m.rows.back();
    double s = 0.0;
    for (double v : last) s += v;
    return s / static_cast<double>(last.size());
}

std::optional<double> bwt(const AccuracyMatrix& m) {
    m.validate();
    const int T = m.num_tasks();
    if (T < 2) return std::nullopt;
    double s = 0.0;
    for (int i = 0; i < T - 1; ++i)
        s += m.rows.back()[static_cast<std::size_t>(i)] -
             m.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    return s / static_cast<double>(T - 1);
}

double la(const AccuracyMatrix& m, int start_task) {
    m.validate();
    const int T = m.num_tasks();
    if (start_task < 1 || start_task > T) throw ConsistencyError("la start task out of range");
    double s = 0.0;
    int n = 0;
    for (int i = start_task - 1; i < T; ++i) {
        s += m.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
        ++n;
    }
    return s / static_cast<double>(n);
}

std::int64_t param_count(const NetworkState& network) { return network.param_count(); }

CostReport flops_estimate(const Architecture& arch, const std::vector<double>& density_per_layer,
                          std::int64_t samples_per_epoch, int epochs) {
    if (static_cast<int>(density_per_layer.size()) != arch.num_edge_layers())
        throw ConsistencyError("need one density per edge layer");
    CostReport rep;
    rep.density_per_layer = density_per_layer;
    const double schedule = static_cast<double>(samples_per_epoch) * epochs;
    for (int e = 0; e < arch.num_edge_layers(); ++e) {
        const NeuronLayer& src = arch.layer(e);
        const NeuronLayer& tgt = arch.layer(e + 1);
        double fwd_madds;  // multiply-adds per sample, fully dense
        if (tgt.conv) {
            fwd_madds = 2.0 * src.width * tgt.width * tgt.kernel * tgt.kernel * tgt.h * tgt.w;
        } else {
            fwd_madds = 2.0 * src.width * src.pooled_spatial() * tgt.width;
        }
        // backward costed at 2x forward
        const double dense = 3.0 * fwd_madds * schedule;
        rep.dense_per_layer.push_back(dense);
        rep.dense_flops += dense;
        rep.sparse_flops += density_per_layer[static_cast<std::size_t>(e)] * dense;
    }
    return rep;
}

}  // namespace afaf
