#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctxmat/dynamics.hpp"

using namespace ctxmat;

namespace {
ContextMatrix mat2(double a, double b, double c, double d) {
    ContextMatrix m(2, 2);
    m << a, b, c, d;
    return m;
}
BehaviorFrame col2(double a, double b) {
    BehaviorFrame f(2, 1);
    f << a, b;
    return f;
}
}  // namespace

TEST_CASE("predict_step") {
    const DynamicsParams framework{0.5, 0.9};  // I=0.5, alpha=0.9
    SUBCASE("identity matrix") {
        const auto out = predict_step(mat2(1, 0, 0, 1), col2(1, 1), framework);
        CHECK(out(0, 0) == doctest::Approx(-0.4));
        CHECK(out(1, 0) == doctest::Approx(-0.4));
    }
    SUBCASE("asymmetric matrix") {
        const auto out = predict_step(mat2(1, 0.2, 0, 1), col2(1, 1), framework);
        CHECK(out(0, 0) == doctest::Approx(-0.3));
        CHECK(out(1, 0) == doctest::Approx(-0.4));
    }
    SUBCASE("zero matrix is pure decay") {
        const auto b = col2(0.7, -0.3);
        const auto out = predict_step(mat2(0, 0, 0, 0), b, framework);
        CHECK(out(0, 0) == doctest::Approx(-0.9 * 0.7));
        CHECK(out(1, 0) == doctest::Approx(-0.9 * -0.3));
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(predict_step(ContextMatrix::Zero(3, 3), col2(1, 1), framework),
                        DimensionError);
    }
    SUBCASE("linearity in b_prev") {
        const auto C = mat2(0.4, -0.7, 1.1, 0.2);
        const auto x = col2(0.3, -0.5);
        const auto y = col2(-1.2, 0.8);
        const BehaviorFrame lhs = predict_step(C, x + y, framework);
        const BehaviorFrame rhs = predict_step(C, x, framework) + predict_step(C, y, framework);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("multi-channel applies per column") {
        BehaviorFrame b(2, 2);
        b << 1, 2, 1, 2;
        const auto out = predict_step(mat2(1, 0, 0, 1), b, framework);
        CHECK(out(0, 0) == doctest::Approx(-0.4));
        CHECK(out(0, 1) == doctest::Approx(-0.8));
    }
}

TEST_CASE("simulate") {
    SUBCASE("noiseless series is iterated predict_step") {
        GroundTruthSpec spec;
        spec.matrix = mat2(0.5, -1, 1, 0);
        spec.noise = {0.0, 11};
        spec.length = 50;
        spec.params = {0.5, 0.1};
        spec.init_seed = 3;
        const auto series = simulate(spec);
        REQUIRE(series.length() == 50);
        BehaviorFrame b = series.frames[0];
        for (std::size_t t = 1; t < 50; ++t) {
            b = predict_step(spec.matrix, b, spec.params);
            CHECK((series.frames[t] - b).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    SUBCASE("zero matrix decays the initial frame") {
        GroundTruthSpec spec;
        spec.matrix = mat2(0, 0, 0, 0);
        spec.noise = {0.0, 0};
        spec.length = 2;
        spec.params = {0.5, 0.9};
        spec.init_seed = 5;
        const auto series = simulate(spec);
        CHECK(series.frames[1](0, 0) == doctest::Approx(-0.9 * series.frames[0](0, 0)));
    }
    SUBCASE("initial behaviors are uniform in (0,1)") {
        GroundTruthSpec spec;
        spec.matrix = mat2(0, 0, 0, 0);
        spec.noise = {0.0, 0};
        spec.length = 2;
        spec.params = {0.5, 0.1};
        for (std::uint64_t s = 0; s < 50; ++s) {
            spec.init_seed = s;
            const auto f0 = simulate(spec).frames[0];
            CHECK(f0(0, 0) >= 0.0);
            CHECK(f0(0, 0) < 1.0);
            CHECK(f0(1, 0) >= 0.0);
            CHECK(f0(1, 0) < 1.0);
        }
    }
    SUBCASE("noise bounded by the amplitude") {
        GroundTruthSpec spec;
        spec.matrix = mat2(0, 0, 0, 0);  // prediction exactly -alpha*b
        spec.noise = {0.25, 17};
        spec.length = 400;
        spec.params = {0.5, 0.1};
        spec.init_seed = 8;
        const auto series = simulate(spec);
        for (std::size_t t = 1; t < series.length(); ++t) {
            const BehaviorFrame eta =
                series.frames[t] - predict_step(spec.matrix, series.frames[t - 1], spec.params);
            CHECK(eta.cwiseAbs().maxCoeff() <= 0.25);
        }
    }
    SUBCASE("determinism") {
        GroundTruthSpec spec;
        spec.matrix = mat2(1, -1, 0, 1);
        spec.noise = {0.1, 21};
        spec.length = 100;
        spec.init_seed = 22;
        const auto a = simulate(spec);
        const auto b = simulate(spec);
        for (std::size_t t = 0; t < 100; ++t)
            CHECK((a.frames[t] - b.frames[t]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("ground_truth_grid") {
    const auto grid = ground_truth_grid(0, {0.5, 0.1});
    CHECK(grid.size() == 405);

    bool zero_at_every_noise[5] = {false, false, false, false, false};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(grid[i].length == 500);
        if (grid[i].matrix.cwiseAbs().sum() == 0.0) zero_at_every_noise[i % 5] = true;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                const double v = grid[i].matrix(r, c);
                CHECK((v == -1.0 || v == 0.0 || v == 1.0));
            }
    }
    for (bool z : zero_at_every_noise) CHECK(z);

    // 81 distinct matrices
    const auto m40 = sign_pattern_matrix(40);  // middle of the enumeration
    CHECK(m40.cwiseAbs().sum() == 0.0);        // (1,1,1,1) in base 3 -> all zeros
}

TEST_CASE("stability smoke test over the 81-matrix grid") {
    // with |eig(I*C - alpha*Id)| < 1 and no noise the trajectory decays
    const DynamicsParams params{0.5, 0.1};
    for (std::size_t m = 0; m < 81; ++m) {
        const auto C = sign_pattern_matrix(m);
        Eigen::Matrix2d M = params.influence_scale * C -
                            params.decay * Eigen::Matrix2d::Identity();
        const double rho = M.eigenvalues().cwiseAbs().maxCoeff();
        if (rho >= 1.0) continue;
        GroundTruthSpec spec;
        spec.matrix = C;
        spec.noise = {0.0, 1};
        spec.length = 500;
        spec.params = params;
        spec.init_seed = m;
        const auto series = simulate(spec);
        CHECK(series.frames.back().norm() <= series.frames.front().norm() + 1e-9);
    }
}
