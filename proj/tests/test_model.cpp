#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "mfuq/model.hpp"

using namespace mfuq;

TEST_CASE("truncated series argument matches hand-computed values") {
    CHECK(taylor_argument(1, 0.0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(taylor_argument(1, 2.0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(taylor_argument(2, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(taylor_argument(6, 1.0) == doctest::Approx(0.5436111111111112).epsilon(1e-15));
    // degree grows toward exp(s)/5
    CHECK(taylor_argument(20, 1.0) == doctest::Approx(std::exp(1.0) / 5.0).epsilon(1e-14));
}

TEST_CASE("benchmark fidelities at corner and center points") {
    CHECK(taylor_fidelity(1, {0.0, 0.0}) == doctest::Approx(0.19866933079506122).epsilon(1e-15));
    CHECK(taylor_fidelity(1, {1.0, 1.0}) == doctest::Approx(0.5646424733950354).epsilon(1e-15));
    CHECK(taylor_fidelity(1, {0.5, 0.5}) == doctest::Approx(0.3894183423086505).epsilon(1e-15));
    CHECK(taylor_fidelity(2, {0.5, 0.5}) == doctest::Approx(0.479425538604203).epsilon(1e-15));
    CHECK(taylor_fidelity(6, {0.5, 0.5}) == doctest::Approx(0.5172299140762388).epsilon(1e-15));
}

TEST_CASE("fidelity gap shrinks as the level rises") {
    const Point y{0.3, 0.8};
    const double gap_low = std::fabs(taylor_fidelity(3, y) - taylor_fidelity(2, y));
    const double gap_high = std::fabs(taylor_fidelity(6, y) - taylor_fidelity(5, y));
    CHECK(gap_high < gap_low);
    CHECK(gap_high < 1e-3);
}

TEST_CASE("top-level gap dominates nowhere on a dense grid") {
    double sup_65 = 0.0;
    double sup_54 = 0.0;
    for (int i = 0; i <= 100; ++i)
        for (int j = 0; j <= 100; ++j) {
            const Point y{i / 100.0, j / 100.0};
            sup_65 = std::max(sup_65, std::fabs(taylor_fidelity(6, y) - taylor_fidelity(5, y)));
            sup_54 = std::max(sup_54, std::fabs(taylor_fidelity(5, y) - taylor_fidelity(4, y)));
        }
    CHECK(sup_65 <= sup_54);
}

TEST_CASE("geometric cost schedule") {
    auto model = make_taylor_benchmark();
    CHECK(model->levels() == 6);
    CHECK(model->domain().dim() == 2);
    CHECK(model->cost(1) == 1.0);
    CHECK(model->cost(2) == 8.0);
    CHECK(model->cost(4) == 512.0);
    CHECK(model->cost(6) == 32768.0);
    double all = 0.0;
    for (int l = 1; l <= 6; ++l) all += model->cost(l);
    CHECK(all == 37449.0);
}

TEST_CASE("every distinct point is charged exactly once") {
    auto model = make_taylor_benchmark();
    const Point a{0.25, 0.75};
    const double v1 = model->evaluate(3, a);
    CHECK(model->total_cost() == 64.0);
    CHECK(model->distinct_evaluations() == 1);
    const double v2 = model->evaluate(3, a);
    CHECK(v1 == v2);
    CHECK(model->total_cost() == 64.0); // served from the cache
    CHECK(model->distinct_evaluations() == 1);
    CHECK(model->eval_count(3) == 1);

    model->evaluate(1, a); // same point, different level: new evaluation
    CHECK(model->total_cost() == 65.0);
    model->evaluate(3, {0.25, 0.7500000001}); // different point
    CHECK(model->total_cost() == 129.0);
    CHECK(model->distinct_evaluations() == 3);
}

TEST_CASE("out-of-range levels and points are rejected") {
    auto model = make_taylor_benchmark();
    CHECK_THROWS(model->evaluate(0, {0.5, 0.5}));
    CHECK_THROWS(model->evaluate(7, {0.5, 0.5}));
    CHECK_THROWS(model->evaluate(1, {0.5, 1.5}));
    CHECK_THROWS(model->evaluate(1, {0.5}));
}

TEST_CASE("multiplicative noise is frozen per point and bounded") {
    NoiseSpec noise;
    noise.kind = NoiseKind::multiplicative_uniform;
    noise.amplitudes = {0.02};
    noise.seed = 11;
    auto noisy = make_taylor_benchmark(2, 6, 8.0, noise);
    auto clean = make_taylor_benchmark();

    const Point y{0.37, 0.61};
    const double raw = clean->evaluate(1, y);
    const double v1 = noisy->evaluate(1, y);
    const double v2 = noisy->evaluate(1, y);
    CHECK(v1 == v2); // same point, same draw
    CHECK(v1 != raw);
    CHECK(std::fabs(v1 / raw - 1.0) <= 0.02);

    // amplitude list covers level 1 only; level 2 stays clean
    CHECK(noisy->evaluate(2, y) == clean->evaluate(2, y));
}

TEST_CASE("additive noise respects the zero amplitude") {
    NoiseSpec noise;
    noise.kind = NoiseKind::additive_gaussian;
    noise.amplitudes = {0.0, 0.1};
    noise.seed = 5;
    auto noisy = make_taylor_benchmark(2, 6, 8.0, noise);
    auto clean = make_taylor_benchmark();
    const Point y{0.12, 0.88};
    CHECK(noisy->evaluate(1, y) == clean->evaluate(1, y));
    CHECK(noisy->evaluate(2, y) != clean->evaluate(2, y));
}

TEST_CASE("noise draws differ between points and seeds") {
    NoiseSpec a;
    a.kind = NoiseKind::multiplicative_uniform;
    a.amplitudes = {0.02};
    a.seed = 1;
    NoiseSpec b = a;
    b.seed = 2;
    auto ma = make_taylor_benchmark(2, 6, 8.0, a);
    auto mb = make_taylor_benchmark(2, 6, 8.0, b);
    const Point y{0.5, 0.5};
    CHECK(ma->evaluate(1, y) != mb->evaluate(1, y));
    auto ma2 = make_taylor_benchmark(2, 6, 8.0, a);
    CHECK(ma->evaluate(1, y) == ma2->evaluate(1, y)); // seed reproduces the draw
    CHECK(ma->evaluate(1, {0.1, 0.2}) / taylor_fidelity(1, {0.1, 0.2}) !=
          doctest::Approx(ma->evaluate(1, y) / taylor_fidelity(1, y)).epsilon(1e-12));
}

TEST_CASE("custom evaluator models work through the same interface") {
    ParamDomain dom({-1.0, 0.0}, {1.0, 2.0});
    FidelityModel model(dom, 2, [](int level, const Point& y) {
        return level == 1 ? y[0] + y[1] : y[0] * y[1];
    }, 4.0);
    CHECK(model.cost(2) == 4.0);
    CHECK(model.evaluate(1, {0.5, 1.0}) == 1.5);
    CHECK(model.evaluate(2, {0.5, 1.0}) == 0.5);
}
