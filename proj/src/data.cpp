#include "afaf/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "afaf/error.hpp"

namespace afaf {

namespace {

std::vector<unsigned char> read_all(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DependencyError("cannot open " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

void write_be32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

IdxFile load_idx(const std::string& path) {
    const auto raw = read_all(path);
    if (raw.size() < 8) throw FormatError("idx file too short: " + path);
    const std::uint32_t magic = be32(raw.data());
    IdxFile out;
    if (magic == 0x00000803u) {
        if (raw.size() < 16) throw FormatError("idx image header truncated: " + path);
        const std::size_t n = be32(raw.data() + 4);
        out.rows = static_cast<int>(be32(raw.data() + 8));
        out.cols = static_cast<int>(be32(raw.data() + 12));
        out.is_images = true;
        const std::size_t pix = static_cast<std::size_t>(out.rows) * static_cast<std::size_t>(out.cols);
        if (raw.size() != 16 + n * pix)
            throw LengthError("idx image payload has " + std::to_string(raw.size() - 16) +
                              " bytes, expected " + std::to_string(n * pix));
        out.images.reserve(n);
        const unsigned char* p = raw.data() + 16;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> img(pix);
            for (std::size_t j = 0; j < pix; ++j) img[j] = static_cast<double>(p[j]) / 255.0;
            out.images.push_back(std::move(img));
            p += pix;
        }
    } else if (magic == 0x00000801u) {
        const std::size_t n = be32(raw.data() + 4);
        if (raw.size() != 8 + n)
            throw LengthError("idx label payload has " + std::to_string(raw.size() - 8) +
                              " bytes, expected " + std::to_string(n));
        out.labels.assign(raw.begin() + 8, raw.end());
    } else {
        throw FormatError("bad idx magic in " + path);
    }
    return out;
}

namespace {
LabeledImages load_cifar_records(const std::string& path, std::size_t label_bytes) {
    const auto raw = read_all(path);
    const std::size_t rec = label_bytes + 3072;
    if (raw.empty() || raw.size() % rec != 0)
        throw FormatError("cifar file size " + std::to_string(raw.size()) + " not divisible by " +
                          std::to_string(rec) + ": " + path);
    LabeledImages out;
    const std::size_t n = raw.size() / rec;
    out.images.reserve(n);
    out.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* p = raw.data() + i * rec;
        out.labels.push_back(p[label_bytes - 1]);  // fine label last
        std::vector<double> img(3072);
        for (std::size_t j = 0; j < 3072; ++j)
            img[j] = static_cast<double>(p[label_bytes + j]) / 255.0;
        out.images.push_back(std::move(img));
    }
    return out;
}
}  // namespace

LabeledImages load_cifar_binary(const std::string& path) { return load_cifar_records(path, 1); }
LabeledImages load_cifar100_binary(const std::string& path) { return load_cifar_records(path, 2); }

namespace {
// bilinear sample at fractional position, edge-clamped
double bilerp(const double* plane, int h, int w, double y, double x) {
    const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, h - 1);
    const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const double fy = std::clamp(y - y0, 0.0, 1.0);
    const double fx = std::clamp(x - x0, 0.0, 1.0);
    const double a = plane[y0 * w + x0] * (1 - fx) + plane[y0 * w + x1] * fx;
    const double b = plane[y1 * w + x0] * (1 - fx) + plane[y1 * w + x1] * fx;
    return a * (1 - fy) + b * fy;
}
}  // namespace

std::vector<std::vector<double>> preprocess(const std::vector<std::vector<double>>& images,
                                            int channels, int height, int width) {
    constexpr int kOut = 32;
    std::vector<std::vector<double>> out;
    out.reserve(images.size());
    const double sy = static_cast<double>(height) / kOut;
    const double sx = static_cast<double>(width) / kOut;
    for (const auto& img : images) {
        if (static_cast<int>(img.size()) != channels * height * width)
            throw InputShapeError("image size does not match declared shape");
        std::vector<double> res(static_cast<std::size_t>(3 * kOut * kOut));
        for (int c = 0; c < 3; ++c) {
            const int src_c = channels == 1 ? 0 : c;
            const double* plane = img.data() + static_cast<std::size_t>(src_c) * height * width;
            double* dst = res.data() + static_cast<std::size_t>(c) * kOut * kOut;
            for (int y = 0; y < kOut; ++y)
                for (int x = 0; x < kOut; ++x) {
                    const double yy = (y + 0.5) * sy - 0.5;
                    const double xx = (x + 0.5) * sx - 0.5;
                    dst[y * kOut + x] = std::clamp(bilerp(plane, height, width, yy, xx), 0.0, 1.0);
                }
        }
        out.push_back(std::move(res));
    }
    return out;
}

TaskSequence synth_gaussian_tasks(int num_tasks, int classes_per_task, int dim,
                                  double cluster_separation, int samples_per_class,
                                  int test_samples_per_class, std::uint64_t seed,
                                  double similarity, int reuse_start_task) {
    if (cluster_separation <= 0.0) throw ConfigError("cluster separation must be > 0");
    Rng rng(seed);
    Rng noise_rng = rng.split(1);

    auto gauss = [](Rng& r) {
        double u1 = r.uniform();
        while (u1 <= 0.0) u1 = r.uniform();
        const double u2 = r.uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    };
    auto unit_dir = [&](Rng& r) {
        std::vector<double> v(static_cast<std::size_t>(dim));
        double norm = 0.0;
        for (auto& x : v) {
            x = gauss(r);
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm > 0 ? norm : 1.0;
        return v;
    };

    std::vector<double> shift = unit_dir(rng);
    for (auto& x : shift) x *= cluster_separation * 0.5;

    TaskSequence seq;
    seq.name = "synthetic";
    seq.reuse_start_task = reuse_start_task;
    seq.input_shape = {dim, 1, 1};

    std::vector<std::vector<std::vector<double>>> means(static_cast<std::size_t>(num_tasks));
    int next_class = 0;
    for (int t = 0; t < num_tasks; ++t) {
        TaskData task;
        means[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(classes_per_task));
        for (int c = 0; c < classes_per_task; ++c) {
            std::vector<double> mean;
            if (similarity > 0.0 && t >= classes_per_task) {
                const auto& base = means[static_cast<std::size_t>(t - classes_per_task)][static_cast<std::size_t>(c)];
                auto fresh = unit_dir(rng);
                mean.resize(static_cast<std::size_t>(dim));
                for (int i = 0; i < dim; ++i)
                    mean[static_cast<std::size_t>(i)] =
                        similarity * (base[static_cast<std::size_t>(i)] + shift[static_cast<std::size_t>(i)]) +
                        (1.0 - similarity) * cluster_separation * fresh[static_cast<std::size_t>(i)];
            } else {
                mean = unit_dir(rng);
                for (auto& x : mean) x *= cluster_separation;
            }
            means[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] = mean;

            ClassDataset train, test;
            train.class_id = test.class_id = next_class;
            task.class_ids.push_back(next_class);
            ++next_class;
            auto draw = [&](int n, ClassDataset& dst) {
                for (int i = 0; i < n; ++i) {
                    std::vector<double> x(static_cast<std::size_t>(dim));
                    for (int j = 0; j < dim; ++j)
                        x[static_cast<std::size_t>(j)] = mean[static_cast<std::size_t>(j)] + gauss(noise_rng);
                    dst.samples.push_back(std::move(x));
                }
            };
            draw(samples_per_class, train);
            draw(test_samples_per_class, test);
            task.train.push_back(std::move(train));
            task.test.push_back(std::move(test));
        }
        seq.tasks.push_back(std::move(task));
    }
    return seq;
}

// ---------------------------------------------------------------------------
// procedural digit corpus

namespace {

// Stroke glyphs on a 28x28 canvas, one orientation and center per class.
// Classes must stay geometrically distinct: nested glyphs (a seven-segment
// 8 contains every other digit) leave nothing class-selective for a
// classifier to hold on to.

void draw_line(std::vector<double>& img, int x0, int y0, int x1, int y1, double v, int thick) {
    const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1;
    for (int i = 0; i < steps; ++i) {
        const double f = steps > 1 ? static_cast<double>(i) / (steps - 1) : 0.0;
        const int x = static_cast<int>(std::lround(x0 + f * (x1 - x0)));
        const int y = static_cast<int>(std::lround(y0 + f * (y1 - y0)));
        for (int dy = 0; dy < thick; ++dy)
            for (int dx = 0; dx < thick; ++dx) {
                const int yy = y + dy, xx = x + dx;
                if (yy >= 0 && yy < 28 && xx >= 0 && xx < 28)
                    img[static_cast<std::size_t>(yy) * 28 + xx] = std::min(1.0, img[static_cast<std::size_t>(yy) * 28 + xx] + v);
            }
    }
}

std::vector<double> render_digit(int digit, Rng& rng) {
    std::vector<double> img(28 * 28, 0.0);
    const int dx = static_cast<int>(rng.uniform_index(5)) - 2;
    const int dy = static_cast<int>(rng.uniform_index(5)) - 2;
    const int thick = 2 + static_cast<int>(rng.uniform_index(2));
    const double v = rng.uniform(0.65, 1.0);

    constexpr double kPi = 3.14159265358979323846;
    const double angle = digit * 36.0 * kPi / 180.0;
    const double ring = digit * 2.0 * kPi / 10.0;
    const double cx = 13.5 + 6.0 * std::cos(ring) + dx;
    const double cy = 13.5 + 6.0 * std::sin(ring) + dy;

    // main stroke through the class center, plus a serif at one end
    const double ux = std::cos(angle), uy = std::sin(angle);
    const int x0 = static_cast<int>(std::lround(cx - 8.0 * ux));
    const int y0 = static_cast<int>(std::lround(cy - 8.0 * uy));
    const int x1 = static_cast<int>(std::lround(cx + 8.0 * ux));
    const int y1 = static_cast<int>(std::lround(cy + 8.0 * uy));
    draw_line(img, x0, y0, x1, y1, v, thick);
    draw_line(img, x1, y1, static_cast<int>(std::lround(x1 - 5.0 * uy)),
              static_cast<int>(std::lround(y1 + 5.0 * ux)), v, thick);

    // margin tick at a digit-specific row as an extra class anchor
    const int row = 2 + 2 * digit + dy;
    draw_line(img, 2 + dx, row, 6 + dx, row, v, thick);

    for (auto& p : img) {
        p += rng.uniform(-0.08, 0.08);
        p = std::clamp(p, 0.0, 1.0);
    }
    return img;
}

void write_idx_pair(const std::string& img_path, const std::string& lbl_path,
                    const std::vector<std::vector<double>>& images, const std::vector<int>& labels) {
    std::ofstream fi(img_path, std::ios::binary);
    if (!fi) throw DependencyError("cannot write " + img_path);
    write_be32(fi, 0x00000803u);
    write_be32(fi, static_cast<std::uint32_t>(images.size()));
    write_be32(fi, 28);
    write_be32(fi, 28);
    for (const auto& img : images)
        for (double p : img) {
            const unsigned char b = static_cast<unsigned char>(std::lround(p * 255.0));
            fi.write(reinterpret_cast<const char*>(&b), 1);
        }
    std::ofstream fl(lbl_path, std::ios::binary);
    if (!fl) throw DependencyError("cannot write " + lbl_path);
    write_be32(fl, 0x00000801u);
    write_be32(fl, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) {
        const unsigned char b = static_cast<unsigned char>(l);
        fl.write(reinterpret_cast<const char*>(&b), 1);
    }
}

}  // namespace

void generate_digit_idx(const std::string& dir, int train_per_class, int test_per_class,
                        std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    Rng rng(seed);
    auto make_split = [&](int per_class, std::uint64_t stream, const std::string& img_name,
                          const std::string& lbl_name) {
        Rng r = rng.split(stream);
        std::vector<std::vector<double>> images;
        std::vector<int> labels;
        for (int d = 0; d < 10; ++d)
            for (int i = 0; i < per_class; ++i) {
                images.push_back(render_digit(d, r));
                labels.push_back(d);
            }
        write_idx_pair(dir + "/" + img_name, dir + "/" + lbl_name, images, labels);
    };
    make_split(train_per_class, 1, "train-images-idx3-ubyte", "train-labels-idx1-ubyte");
    make_split(test_per_class, 2, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte");
}

// ---------------------------------------------------------------------------
// benchmark construction

namespace {

struct SplitData {
    std::vector<std::vector<double>> images;  // preprocessed 3x32x32
    std::vector<int> labels;
};

SplitData load_idx_split(const std::string& img_path, const std::string& lbl_path) {
    std::vector<std::string> missing;
    for (const auto& p : {img_path, lbl_path})
        if (!std::filesystem::exists(p)) missing.push_back(p);
    if (!missing.empty()) {
        std::string msg = "missing dataset files:";
        for (const auto& p : missing) msg += " " + p;
        throw DependencyError(msg);
    }
    auto imgs = load_idx(img_path);
    auto lbls = load_idx(lbl_path);
    if (!imgs.is_images || imgs.images.size() != lbls.labels.size())
        throw FormatError("image/label file mismatch: " + img_path);
    SplitData out;
    out.images = preprocess(imgs.images, 1, imgs.rows, imgs.cols);
    out.labels = lbls.labels;
    return out;
}

void fill_tasks(TaskSequence& seq, const std::vector<std::vector<int>>& task_classes,
                const SplitData& train, const SplitData& test, int cap_train, int cap_test,
                int label_offset = 0) {
    for (const auto& classes : task_classes) {
        TaskData task;
        for (int c : classes) {
            ClassDataset tr, te;
            tr.class_id = te.class_id = c + label_offset;
            for (std::size_t i = 0; i < train.labels.size(); ++i) {
                if (train.labels[i] != c) continue;
                if (cap_train > 0 && static_cast<int>(tr.samples.size()) >= cap_train) break;
                tr.samples.push_back(train.images[i]);
            }
            for (std::size_t i = 0; i < test.labels.size(); ++i) {
                if (test.labels[i] != c) continue;
                if (cap_test > 0 && static_cast<int>(te.samples.size()) >= cap_test) break;
                te.samples.push_back(test.images[i]);
            }
            if (tr.samples.empty() || te.samples.empty())
                throw DependencyError("no samples for class " + std::to_string(c));
            task.class_ids.push_back(c + label_offset);
            task.train.push_back(std::move(tr));
            task.test.push_back(std::move(te));
        }
        seq.tasks.push_back(std::move(task));
    }
}

SplitData load_cifar_train(const std::string& root) {
    SplitData out;
    for (int b = 1; b <= 5; ++b) {
        const std::string p = root + "/cifar-10-batches-bin/data_batch_" + std::to_string(b) + ".bin";
        if (!std::filesystem::exists(p)) throw DependencyError("missing dataset file: " + p);
        auto d = load_cifar_binary(p);
        out.images.insert(out.images.end(), d.images.begin(), d.images.end());
        out.labels.insert(out.labels.end(), d.labels.begin(), d.labels.end());
    }
    return out;
}

SplitData load_cifar_test(const std::string& root) {
    const std::string p = root + "/cifar-10-batches-bin/test_batch.bin";
    if (!std::filesystem::exists(p)) throw DependencyError("missing dataset file: " + p);
    auto d = load_cifar_binary(p);
    return {d.images, d.labels};
}

SplitData mnist_family(const std::string& dir, bool train, const BenchmarkOptions& opt) {
    const std::string img = dir + (train ? "/train-images-idx3-ubyte" : "/t10k-images-idx3-ubyte");
    const std::string lbl = dir + (train ? "/train-labels-idx1-ubyte" : "/t10k-labels-idx1-ubyte");
    if (!std::filesystem::exists(img) && opt.generate_if_missing) {
        const int per = std::max(opt.samples_per_class, 64);
        const int per_test = std::max(opt.test_samples_per_class, 32);
        generate_digit_idx(dir, per, per_test, opt.generate_seed);
    }
    return load_idx_split(img, lbl);
}

}  // namespace

std::pair<BenchmarkSpec, TaskSequence> build_benchmark(const std::string& name,
                                                       const BenchmarkOptions& opt) {
    BenchmarkSpec spec;
    spec.name = name;
    TaskSequence seq;
    seq.name = name;
    seq.input_shape = {3, 32, 32};

    // CIFAR-10 label order: airplane car bird cat deer dog frog horse ship truck
    if (name == "split-cifar10" || name == "sim-cifar10") {
        spec.task_classes = name == "split-cifar10"
                                ? std::vector<std::vector<int>>{{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}}
                                : std::vector<std::vector<int>>{{1, 3}, {7, 9}, {5, 4}, {0, 2}, {6, 8}};
        spec.reuse_start_task = 3;
        auto train = load_cifar_train(opt.data_root);
        auto test = load_cifar_test(opt.data_root);
        fill_tasks(seq, spec.task_classes, train, test, opt.samples_per_class, opt.test_samples_per_class);
    } else if (name == "sim-cifar100") {
        spec.task_classes = {{0, 35}, {50, 8}, {6, 43}, {9, 25}, {53, 11}, {65, 48}, {14, 88}, {16, 20}};
        spec.reuse_start_task = 5;
        const std::string tr = opt.data_root + "/cifar-100-binary/train.bin";
        const std::string te = opt.data_root + "/cifar-100-binary/test.bin";
        for (const auto& p : {tr, te})
            if (!std::filesystem::exists(p)) throw DependencyError("missing dataset file: " + p);
        auto dtr = load_cifar100_binary(tr);
        auto dte = load_cifar100_binary(te);
        fill_tasks(seq, spec.task_classes, {dtr.images, dtr.labels}, {dte.images, dte.labels},
                   opt.samples_per_class, opt.test_samples_per_class);
    } else if (name == "mix") {
        // 8 tasks: CIFAR10 / MNIST / NotMNIST / FashionMNIST halves; global class
        // ids offset by 0/10/20/30 per source dataset
        spec.reuse_start_task = 5;
        auto ctr = load_cifar_train(opt.data_root);
        auto cte = load_cifar_test(opt.data_root);
        auto mtr = mnist_family(opt.data_root + "/mnist", true, opt);
        auto mte = mnist_family(opt.data_root + "/mnist", false, opt);
        auto ntr = mnist_family(opt.data_root + "/notmnist", true, opt);
        auto nte = mnist_family(opt.data_root + "/notmnist", false, opt);
        auto ftr = mnist_family(opt.data_root + "/fashion-mnist", true, opt);
        auto fte = mnist_family(opt.data_root + "/fashion-mnist", false, opt);
        const std::vector<std::vector<int>> first{{0, 1, 2, 3, 4}};
        const std::vector<std::vector<int>> second{{5, 6, 7, 8, 9}};
        fill_tasks(seq, first, ctr, cte, opt.samples_per_class, opt.test_samples_per_class, 0);
        fill_tasks(seq, first, mtr, mte, opt.samples_per_class, opt.test_samples_per_class, 10);
        fill_tasks(seq, first, ntr, nte, opt.samples_per_class, opt.test_samples_per_class, 20);
        fill_tasks(seq, first, ftr, fte, opt.samples_per_class, opt.test_samples_per_class, 30);
        fill_tasks(seq, second, ctr, cte, opt.samples_per_class, opt.test_samples_per_class, 0);
        fill_tasks(seq, second, mtr, mte, opt.samples_per_class, opt.test_samples_per_class, 10);
        fill_tasks(seq, second, ntr, nte, opt.samples_per_class, opt.test_samples_per_class, 20);
        fill_tasks(seq, second, ftr, fte, opt.samples_per_class, opt.test_samples_per_class, 30);
        for (const auto& t : seq.tasks) spec.task_classes.push_back(t.class_ids);
    } else if (name == "split-mnist" || name == "sim-mnist") {
        // sim-mnist spreads visually similar digits across tasks
        // (1~7, 3~8, 4~9, 5~6); order is artifact-defined
        spec.task_classes = name == "split-mnist"
                                ? std::vector<std::vector<int>>{{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}}
                                : std::vector<std::vector<int>>{{1, 3}, {7, 8}, {4, 5}, {9, 6}, {0, 2}};
        spec.reuse_start_task = 3;
        auto train = mnist_family(opt.data_root + "/mnist", true, opt);
        auto test = mnist_family(opt.data_root + "/mnist", false, opt);
        fill_tasks(seq, spec.task_classes, train, test, opt.samples_per_class, opt.test_samples_per_class);
    } else if (name == "synthetic") {
        seq = synth_gaussian_tasks(opt.synth_tasks, opt.synth_classes_per_task, opt.synth_dim,
                                   opt.synth_separation, opt.synth_samples, opt.synth_test_samples,
                                   opt.synth_seed, opt.synth_similarity, opt.synth_reuse_start_task);
        seq.name = name;
        spec.reuse_start_task = seq.reuse_start_task;
        for (const auto& t : seq.tasks) spec.task_classes.push_back(t.class_ids);
        return {spec, seq};
    } else {
        throw ConfigError("unknown benchmark: " + name);
    }
    seq.reuse_start_task = spec.reuse_start_task;
    return {spec, seq};
}

}  // namespace afaf
