#include <doctest.h>

#include <cmath>

#include "afaf/error.hpp"
#include "afaf/metrics.hpp"
#include "afaf/rng.hpp"
#include "helpers.hpp"

using namespace afaf;

TEST_CASE("acc is the mean of the last row") {
    AccuracyMatrix m{{{0.4}, {0.5, 0.7}}};
    CHECK(acc(m) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("acc single task") {
    AccuracyMatrix m{{{0.9}}};
    CHECK(acc(m) == doctest::Approx(0.9));
}

TEST_CASE("acc of a constant matrix is the constant") {
    AccuracyMatrix m{{{0.3}, {0.3, 0.3}, {0.3, 0.3, 0.3}}};
    CHECK(acc(m) == doctest::Approx(0.3));
}

TEST_CASE("bwt worked example equals -0.10") {
    AccuracyMatrix m{{{0.80}, {0.70, 0.60}, {0.65, 0.55, 0.50}}};
    REQUIRE(bwt(m).has_value());
    CHECK(*bwt(m) == doctest::Approx(-0.10).epsilon(1e-12));
}

TEST_CASE("bwt is absent for a single task, never zero") {
    AccuracyMatrix m{{{0.8}}};
    CHECK(!bwt(m).has_value());
}

TEST_CASE("bwt zero without forgetting, positive with transfer") {
    AccuracyMatrix none{{{0.8}, {0.8, 0.6}}};
    CHECK(*bwt(none) == doctest::Approx(0.0));
    AccuracyMatrix pos{{{0.5}, {0.7, 0.6}}};
    CHECK(*bwt(pos) > 0.0);
}

TEST_CASE("la over the diagonal") {
    AccuracyMatrix m{{{0.9}, {0.1, 0.8}}};
    CHECK(la(m, 1) == doctest::Approx(0.85));
    CHECK(la(m, 2) == doctest::Approx(0.8));
    AccuracyMatrix m3{{{0.9}, {0.0, 0.8}, {0.0, 0.0, 0.7}}};
    CHECK(la(m3, 2) == doctest::Approx(0.75));
    CHECK_THROWS_AS(la(m3, 4), ConsistencyError);
    CHECK_THROWS_AS(la(m3, 0), ConsistencyError);
}

TEST_CASE("matrix validation rejects bad shapes and ranges") {
    CHECK_THROWS_AS(acc(AccuracyMatrix{}), ConsistencyError);
    CHECK_THROWS_AS(acc(AccuracyMatrix{{{0.5, 0.5}}}), ConsistencyError);
    CHECK_THROWS_AS(acc(AccuracyMatrix{{{1.5}}}), ConsistencyError);
}

// exhaustive 3x3 grid over {0, 0.5, 1} against an independent brute-force evaluator
TEST_CASE("acc/bwt/la on all 3x3 matrices over {0,0.5,1}") {
    const double vals[3] = {0.0, 0.5, 1.0};
    int idx[6];
    for (idx[0] = 0; idx[0] < 3; ++idx[0])
        for (idx[1] = 0; idx[1] < 3; ++idx[1])
            for (idx[2] = 0; idx[2] < 3; ++idx[2])
                for (idx[3] = 0; idx[3] < 3; ++idx[3])
                    for (idx[4] = 0; idx[4] < 3; ++idx[4])
                        for (idx[5] = 0; idx[5] < 3; ++idx[5]) {
                            const double a11 = vals[idx[0]];
                            const double a21 = vals[idx[1]], a22 = vals[idx[2]];
                            const double a31 = vals[idx[3]], a32 = vals[idx[4]], a33 = vals[idx[5]];
                            AccuracyMatrix m{{{a11}, {a21, a22}, {a31, a32, a33}}};
                            CHECK(acc(m) == doctest::Approx((a31 + a32 + a33) / 3.0).epsilon(1e-12));
                            CHECK(*bwt(m) ==
                                  doctest::Approx(((a31 - a11) + (a32 - a22)) / 2.0).epsilon(1e-12));
                            CHECK(la(m, 1) == doctest::Approx((a11 + a22 + a33) / 3.0).epsilon(1e-12));
                            CHECK(la(m, 2) == doctest::Approx((a22 + a33) / 2.0).epsilon(1e-12));
                            CHECK(la(m, 3) == doctest::Approx(a33).epsilon(1e-12));
                        }
}

TEST_CASE("param_count matches brute-force traversal") {
    Rng rng(3);
    auto net = testing::make_mlp_net(6, {9, 7}, 4);
    for (int e = 0; e < net.num_edge_layers(); ++e) testing::add_random_edges(net, e, 0.4, rng);
    std::int64_t expect = 0;
    for (int e = 0; e < net.num_edge_layers(); ++e)
        expect += static_cast<std::int64_t>(net.edge_layer(e).count()) * net.edge_layer(e).block_size;
    CHECK(param_count(net) == expect);
    CHECK(param_count(testing::make_mlp_net(3, {}, 2)) == 0);
}

TEST_CASE("conv edges count kernel scalars") {
    Architecture arch = Architecture::build({1, 6, 6}, {LayerSpec::conv(2, 3),
                                                        LayerSpec::dense(1, Activation::Identity)});
    NetworkState net(arch);
    net.extend_output({0}, 1);
    SparseEdgeSet set;
    set.edge_layer = 0;
    set.owner_task = 1;
    set.src = {0};
    set.tgt = {1};
    set.weights.assign(9, 0.1);  // one 3x3 feature-map pair
    net.add_edges(set);
    CHECK(param_count(net) == 9);
}

TEST_CASE("full-scale conv stack dense parameter count") {
    // 3x32x32 input; 64/128/256 3x3 valid convs with pools after conv2 and
    // conv3; dense 2048, 2048; 10 outputs.
    Architecture arch = Architecture::build(
        {3, 32, 32},
        {LayerSpec::conv(64, 3), LayerSpec::conv(128, 3), LayerSpec::max_pool(),
         LayerSpec::conv(256, 3), LayerSpec::max_pool(), LayerSpec::flatten(), LayerSpec::dense(2048),
         LayerSpec::dense(2048), LayerSpec::dense(10, Activation::Identity)});
    std::int64_t dense = 0;
    for (int e = 0; e < arch.num_edge_layers(); ++e)
        dense += static_cast<std::int64_t>(arch.layer(e).width) * arch.layer(e + 1).width *
                 arch.block_size(e);
    CHECK(dense == 23459520);
}

TEST_CASE("flops: density 1 gives f_s equal to f_D") {
    Architecture arch = Architecture::mlp(4, {5}, 3);
    auto rep = flops_estimate(arch, {1.0, 1.0}, 10, 2);
    CHECK(rep.sparse_flops == doctest::Approx(rep.dense_flops));
    CHECK(rep.ratio() == doctest::Approx(1.0));
}

TEST_CASE("flops: uniform density is the exact ratio") {
    Architecture arch = Architecture::mlp(8, {16, 16}, 4);
    auto rep = flops_estimate(arch, {0.1, 0.1, 0.1}, 100, 5);
    CHECK(rep.ratio() == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("flops: one dense layer hand count") {
    // m=4 inputs, n=3 outputs: forward multiply-adds 2*m*n, backward twice that
    Architecture arch = Architecture::mlp(4, {}, 3);
    const std::int64_t batches_x_epochs = 7 * 3;
    auto rep = flops_estimate(arch, {1.0}, 7, 3);
    CHECK(rep.dense_flops == doctest::Approx(3.0 * (2.0 * 4 * 3) * batches_x_epochs));
}

TEST_CASE("flops is monotone in density") {
    Architecture arch = Architecture::mlp(6, {10}, 2);
    const double lo = flops_estimate(arch, {0.2, 0.5}, 10, 1).sparse_flops;
    const double hi = flops_estimate(arch, {0.3, 0.5}, 10, 1).sparse_flops;
    CHECK(hi > lo);
    CHECK_THROWS_AS(flops_estimate(arch, {0.5}, 10, 1), ConsistencyError);
}
