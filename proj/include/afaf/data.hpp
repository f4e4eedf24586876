#pragma once

#include <string>
#include <vector>

#include "afaf/layer.hpp"
#include "afaf/rng.hpp"

namespace afaf {

struct ClassDataset {
    int class_id = 0;
    std::vector<std::vector<double>> samples;  // flattened channels x h x w, values in [0,1]
};

struct TaskData {
    std::vector<int> class_ids;
    std::vector<ClassDataset> train;
    std::vector<ClassDataset> test;
};

struct TaskSequence {
    std::string name;
    int reuse_start_task = 1;  // 1-based first task that reuses past components
    InputShape input_shape;
    std::vector<TaskData> tasks;
};

struct BenchmarkSpec {
    std::string name;
    int reuse_start_task = 1;
    std::vector<std::vector<int>> task_classes;
};

// IDX container: big-endian magic 0x00000803 (images) or 0x00000801 (labels).
struct IdxFile {
    bool is_images = false;
    int rows = 0, cols = 0;
    std::vector<std::vector<double>> images;  // scaled to [0,1]
    std::vector<int> labels;
};
IdxFile load_idx(const std::string& path);

// CIFAR-10 binary: records of 1 label byte + 3072 pixel bytes (R, G, B planes).
struct LabeledImages {
    std::vector<std::vector<double>> images;  // 3x32x32, [0,1]
    std::vector<int> labels;
};
LabeledImages load_cifar_binary(const std::string& path);
// CIFAR-100 variant: 2 label bytes (coarse, fine); the fine label is kept.
LabeledImages load_cifar100_binary(const std::string& path);

// Bilinear resize to 3x32x32; single-channel inputs replicated to 3 channels.
std::vector<std::vector<double>> preprocess(const std::vector<std::vector<double>>& images,
                                            int channels, int height, int width);

struct BenchmarkOptions {
    std::string data_root;
    int samples_per_class = 0;       // 0 = all
    int test_samples_per_class = 0;  // 0 = all
    bool generate_if_missing = false;  // synthesize digit IDX files for mnist-family benchmarks
    std::uint64_t generate_seed = 7;

    // synthetic benchmark knobs
    int synth_tasks = 5;
    int synth_classes_per_task = 2;
    int synth_dim = 16;
    double synth_separation = 4.0;
    double synth_similarity = 0.0;
    int synth_samples = 128;
    int synth_test_samples = 64;
    std::uint64_t synth_seed = 1;
    int synth_reuse_start_task = 3;
};

std::pair<BenchmarkSpec, TaskSequence> build_benchmark(const std::string& name,
                                                       const BenchmarkOptions& options);

// Isotropic Gaussian clusters, one per class. With similarity > 0, task t's
// cluster directions blend toward those of task t - classes_per_task, shifted
// by a fixed vector (equal at similarity = 1).
TaskSequence synth_gaussian_tasks(int num_tasks, int classes_per_task, int dim,
                                  double cluster_separation, int samples_per_class,
                                  int test_samples_per_class, std::uint64_t seed,
                                  double similarity = 0.0, int reuse_start_task = 3);

// Deterministic stroke-rendered digit corpus in MNIST's IDX layout
// (train/t10k image+label files written under dir).
void generate_digit_idx(const std::string& dir, int train_per_class, int test_per_class,
                        std::uint64_t seed);

}  // namespace afaf
