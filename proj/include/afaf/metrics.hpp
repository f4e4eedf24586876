#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "afaf/layer.hpp"
#include "afaf/network.hpp"

namespace afaf {

// Lower-triangular a_{j,i}: accuracy on task i after learning task j.
// Rows and tasks are 0-based here; rows.size() == T and rows[j].size() == j+1.
struct AccuracyMatrix {
    std::vector<std::vector<double>> rows;

    int num_tasks() const { return static_cast<int>(rows.size()); }
    void validate() const;
};

// mean of the last row
double acc(const AccuracyMatrix& m);

// (1/(T-1)) sum_i (a_{T,i} - a_{i,i}); absent for T < 2
std::optional<double> bwt(const AccuracyMatrix& m);

// mean of a_{i,i} for i >= start_task (1-based start, as in configs)
double la(const AccuracyMatrix& m, int start_task = 1);

std::int64_t param_count(const NetworkState& network);

struct CostReport {
    double dense_flops = 0.0;               // f_D
    double sparse_flops = 0.0;              // f_s
    std::vector<double> dense_per_layer;    // forward+backward per edge layer, whole schedule
    std::vector<double> density_per_layer;
    double ratio() const { return dense_flops > 0.0 ? sparse_flops / dense_flops : 0.0; }
};

// Analytic multiply-add count, forward plus backward (2x forward), over a
// training schedule of samples_per_epoch * epochs samples.
// f_s = sum_l density_l * f_{D,l}.
CostReport flops_estimate(const Architecture& arch, const std::vector<double>& density_per_layer,
                          std::int64_t samples_per_epoch, int epochs);

}  // namespace afaf
