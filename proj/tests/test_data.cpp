#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "afaf/data.hpp"
#include "afaf/error.hpp"

using namespace afaf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("afaf-data-test-" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void push_be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 24));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

}  // namespace

TEST_CASE("idx image loading scales bytes to [0,1]") {
    auto dir = temp_dir("idx");
    std::vector<std::uint8_t> bytes;
    push_be32(bytes, 0x00000803);
    push_be32(bytes, 2);  // images
    push_be32(bytes, 1);  // rows
    push_be32(bytes, 2);  // cols
    bytes.insert(bytes.end(), {255, 0, 51, 102});
    write_bytes(dir / "img", bytes);
    auto f = load_idx((dir / "img").string());
    CHECK(f.is_images);
    CHECK(f.rows == 1);
    CHECK(f.cols == 2);
    REQUIRE(f.images.size() == 2);
    CHECK(f.images[0][0] == doctest::Approx(1.0));
    CHECK(f.images[0][1] == doctest::Approx(0.0));
    CHECK(f.images[1][0] == doctest::Approx(51.0 / 255.0));
}

TEST_CASE("idx label loading") {
    auto dir = temp_dir("idxlab");
    std::vector<std::uint8_t> bytes;
    push_be32(bytes, 0x00000801);
    push_be32(bytes, 3);
    bytes.insert(bytes.end(), {4, 0, 9});
    write_bytes(dir / "lab", bytes);
    auto f = load_idx((dir / "lab").string());
    CHECK(!f.is_images);
    CHECK(f.labels == std::vector<int>{4, 0, 9});
}

TEST_CASE("idx rejects a bad magic and a truncated payload") {
    auto dir = temp_dir("idxbad");
    std::vector<std::uint8_t> bad;
    push_be32(bad, 0x00000777);
    push_be32(bad, 1);
    write_bytes(dir / "bad", bad);
    CHECK_THROWS_AS(load_idx((dir / "bad").string()), FormatError);

    std::vector<std::uint8_t> cut;
    push_be32(cut, 0x00000803);
    push_be32(cut, 2);
    push_be32(cut, 2);
    push_be32(cut, 2);
    cut.insert(cut.end(), {1, 2, 3});  // needs 8 pixel bytes
    write_bytes(dir / "cut", cut);
    CHECK_THROWS_AS(load_idx((dir / "cut").string()), LengthError);
}

TEST_CASE("cifar binary record parsing") {
    auto dir = temp_dir("cifar");
    std::vector<std::uint8_t> rec(1 + 3072, 128);
    rec[0] = 7;
    write_bytes(dir / "batch.bin", rec);
    auto d = load_cifar_binary((dir / "batch.bin").string());
    REQUIRE(d.labels == std::vector<int>{7});
    REQUIRE(d.images[0].size() == 3072);
    CHECK(d.images[0][0] == doctest::Approx(128.0 / 255.0));

    std::vector<std::uint8_t> cut(1 + 3000, 0);
    write_bytes(dir / "cut.bin", cut);
    CHECK_THROWS_AS(load_cifar_binary((dir / "cut.bin").string()), FormatError);
}

TEST_CASE("cifar-100 keeps the fine label") {
    auto dir = temp_dir("cifar100");
    std::vector<std::uint8_t> rec(2 + 3072, 10);
    rec[0] = 3;   // coarse
    rec[1] = 42;  // fine
    write_bytes(dir / "train.bin", rec);
    auto d = load_cifar100_binary((dir / "train.bin").string());
    CHECK(d.labels == std::vector<int>{42});
}

TEST_CASE("preprocess is the identity on conforming 3x32x32 input") {
    std::vector<std::vector<double>> imgs(1, std::vector<double>(3 * 32 * 32));
    for (std::size_t i = 0; i < imgs[0].size(); ++i) imgs[0][i] = (i % 97) / 96.0;
    auto out = preprocess(imgs, 3, 32, 32);
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].size() == imgs[0].size());
    for (std::size_t i = 0; i < imgs[0].size(); ++i)
        CHECK(out[0][i] == doctest::Approx(imgs[0][i]).epsilon(1e-12));
}

TEST_CASE("preprocess replicates gray channels and preserves constants") {
    std::vector<std::vector<double>> imgs(1, std::vector<double>(28 * 28, 0.37));
    auto out = preprocess(imgs, 1, 28, 28);
    REQUIRE(out[0].size() == 3 * 32 * 32);
    for (double v : out[0]) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
    // the three channels are copies of one another
    for (int i = 0; i < 32 * 32; ++i) {
        CHECK(out[0][static_cast<std::size_t>(i)] == out[0][static_cast<std::size_t>(1024 + i)]);
        CHECK(out[0][static_cast<std::size_t>(i)] == out[0][static_cast<std::size_t>(2048 + i)]);
    }
}

TEST_CASE("preprocess matches an independent half-pixel bilinear oracle") {
    const int h = 8, w = 8;
    std::vector<std::vector<double>> imgs(1, std::vector<double>(static_cast<std::size_t>(h * w)));
    for (int i = 0; i < h * w; ++i)
        imgs[0][static_cast<std::size_t>(i)] = 0.5 + 0.5 * std::sin(0.7 * i) * std::cos(0.3 * i);
    auto out = preprocess(imgs, 1, h, w);
    const double sy = static_cast<double>(h) / 32.0, sx = static_cast<double>(w) / 32.0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const double yy = (y + 0.5) * sy - 0.5, xx = (x + 0.5) * sx - 0.5;
            int y0 = static_cast<int>(std::floor(yy)), x0 = static_cast<int>(std::floor(xx));
            const double fy = yy - y0, fx = xx - x0;
            auto at = [&](int r, int c) {
                r = std::clamp(r, 0, h - 1);
                c = std::clamp(c, 0, w - 1);
                return imgs[0][static_cast<std::size_t>(r * w + c)];
            };
            double v = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                       fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
            v = std::clamp(v, 0.0, 1.0);
            CHECK(out[0][static_cast<std::size_t>(y * 32 + x)] == doctest::Approx(v).epsilon(1e-12));
        }
}

TEST_CASE("generated digit corpus round-trips through the idx loader") {
    auto dir = temp_dir("digits");
    generate_digit_idx(dir.string(), 6, 3, 99);
    for (const char* f : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                          "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"})
        CHECK(fs::exists(dir / f));
    auto imgs = load_idx((dir / "train-images-idx3-ubyte").string());
    auto labs = load_idx((dir / "train-labels-idx1-ubyte").string());
    CHECK(imgs.rows == 28);
    CHECK(imgs.cols == 28);
    CHECK(imgs.images.size() == 60);
    REQUIRE(labs.labels.size() == 60);
    std::vector<int> per_class(10, 0);
    for (int l : labs.labels) {
        REQUIRE(l >= 0);
        REQUIRE(l <= 9);
        ++per_class[static_cast<std::size_t>(l)];
    }
    for (int c : per_class) CHECK(c == 6);
    // strokes present: images are neither blank nor saturated
    for (const auto& im : imgs.images) {
        double sum = 0.0;
        for (double v : im) sum += v;
        CHECK(sum > 5.0);
        CHECK(sum < 0.8 * 28 * 28);
    }

    auto dir2 = temp_dir("digits2");
    generate_digit_idx(dir2.string(), 6, 3, 99);
    auto imgs2 = load_idx((dir2 / "train-images-idx3-ubyte").string());
    CHECK(imgs2.images == imgs.images);  // same seed, same corpus
}

TEST_CASE("split-mnist and sim-mnist benchmark definitions") {
    auto dir = temp_dir("bench");
    BenchmarkOptions opt;
    opt.data_root = dir.string();
    opt.samples_per_class = 8;
    opt.test_samples_per_class = 4;
    opt.generate_if_missing = true;

    auto [spec, seq] = build_benchmark("split-mnist", opt);
    CHECK(spec.task_classes ==
          std::vector<std::vector<int>>{{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}});
    CHECK(spec.reuse_start_task == 3);
    CHECK(seq.reuse_start_task == 3);
    REQUIRE(seq.tasks.size() == 5);
    CHECK(seq.input_shape.channels == 3);
    CHECK(seq.input_shape.height == 32);
    for (const auto& t : seq.tasks) {
        REQUIRE(t.train.size() == 2);
        for (const auto& cd : t.train) {
            CHECK(cd.samples.size() == 8);
            CHECK(cd.samples[0].size() == 3 * 32 * 32);
        }
        for (const auto& cd : t.test) CHECK(cd.samples.size() == 4);
    }

    auto [spec2, seq2] = build_benchmark("sim-mnist", opt);
    CHECK(spec2.task_classes ==
          std::vector<std::vector<int>>{{1, 3}, {7, 8}, {4, 5}, {9, 6}, {0, 2}});
    CHECK(seq2.tasks[3].class_ids == std::vector<int>{9, 6});

    CHECK_THROWS_AS(build_benchmark("no-such-benchmark", opt), ConfigError);
}

TEST_CASE("missing dataset files raise a dependency error") {
    auto dir = temp_dir("missing");
    BenchmarkOptions opt;
    opt.data_root = dir.string();
    opt.generate_if_missing = false;
    CHECK_THROWS_AS(build_benchmark("split-mnist", opt), DependencyError);
    CHECK_THROWS_AS(build_benchmark("split-cifar10", opt), DependencyError);
}

TEST_CASE("synthetic tasks: seed stability and disjoint class ids") {
    auto a = synth_gaussian_tasks(4, 2, 8, 4.0, 16, 8, 31);
    auto b = synth_gaussian_tasks(4, 2, 8, 4.0, 16, 8, 31);
    REQUIRE(a.tasks.size() == 4);
    std::vector<int> ids;
    for (std::size_t t = 0; t < a.tasks.size(); ++t) {
        for (int c : a.tasks[t].class_ids) ids.push_back(c);
        for (std::size_t c = 0; c < a.tasks[t].train.size(); ++c)
            CHECK(a.tasks[t].train[c].samples == b.tasks[t].train[c].samples);
    }
    std::vector<int> expect(ids.size());
    for (std::size_t i = 0; i < expect.size(); ++i) expect[i] = static_cast<int>(i);
    CHECK(ids == expect);  // consecutive, never reused

    auto c = synth_gaussian_tasks(4, 2, 8, 4.0, 16, 8, 32);
    CHECK(c.tasks[0].train[0].samples != a.tasks[0].train[0].samples);
}

TEST_CASE("synthetic similarity 1 repeats earlier clusters behind a fixed shift") {
    const int dim = 16, n = 512;
    auto seq = synth_gaussian_tasks(4, 2, dim, 4.0, n, 8, 5, 1.0);
    auto mean_of = [&](int t, int c) {
        std::vector<double> m(static_cast<std::size_t>(dim), 0.0);
        for (const auto& s : seq.tasks[static_cast<std::size_t>(t)].train[static_cast<std::size_t>(c)].samples)
            for (int i = 0; i < dim; ++i) m[static_cast<std::size_t>(i)] += s[static_cast<std::size_t>(i)];
        for (auto& v : m) v /= n;
        return m;
    };
    // task 2 repeats task 0 (and 3 repeats 1) shifted by one shared vector
    auto d0 = mean_of(2, 0), d1 = mean_of(2, 1), b0 = mean_of(0, 0), b1 = mean_of(0, 1);
    double shift_norm = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double sa = d0[static_cast<std::size_t>(i)] - b0[static_cast<std::size_t>(i)];
        const double sb = d1[static_cast<std::size_t>(i)] - b1[static_cast<std::size_t>(i)];
        CHECK(std::abs(sa - sb) < 0.4);  // same shift on both classes
        shift_norm += sa * sa;
    }
    CHECK(std::sqrt(shift_norm) == doctest::Approx(2.0).epsilon(0.25));  // separation/2
}
