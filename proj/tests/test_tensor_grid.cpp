#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "mfuq/tensor_grid.hpp"

using namespace mfuq;

TEST_CASE("knot counts follow the nested doubling rule") {
    CHECK(level_to_knots(1) == 1);
    CHECK(level_to_knots(2) == 3);
    CHECK(level_to_knots(3) == 5);
    CHECK(level_to_knots(4) == 9);
    CHECK(level_to_knots(5) == 17);
    CHECK(level_to_knots(10) == 513);
    CHECK(level_to_knots(0) == 0); // empty coarser neighbour of level 1
}

TEST_CASE("three-point rule hits the interval ends and exact middle") {
    const auto pts = cc_points(3);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0] == 1.0);
    CHECK(pts[1] == 0.0); // exactly, not just approximately
    CHECK(pts[2] == -1.0);
}

TEST_CASE("single-point rule is the midpoint") {
    const auto pts = cc_points(1);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0] == 0.0);
}

TEST_CASE("node sets of successive levels are bitwise nested") {
    for (int level = 2; level <= 6; ++level) {
        const auto coarse = cc_points(level_to_knots(level - 1));
        const auto fine = cc_points(level_to_knots(level));
        std::set<double> fine_set(fine.begin(), fine.end());
        for (double x : coarse) CHECK(fine_set.count(x) == 1);
    }
}

TEST_CASE("nodes decrease strictly and symmetric pairs cancel") {
    const auto pts = cc_points(9);
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i] < pts[i - 1]);
    for (std::size_t i = 0; i < pts.size(); ++i)
        CHECK(pts[i] == doctest::Approx(-pts[pts.size() - 1 - i]).epsilon(1e-14));
}

TEST_CASE("barycentric weights alternate and halve at the ends") {
    const auto w = cc_barycentric_weights(5);
    REQUIRE(w.size() == 5);
    CHECK(w[0] == 0.5);
    CHECK(w[1] == -1.0);
    CHECK(w[2] == 1.0);
    CHECK(w[3] == -1.0);
    CHECK(w[4] == 0.5);
    CHECK(cc_barycentric_weights(1) == std::vector<double>{1.0});
}

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
    std::vector<double> x, w;
    gauss_legendre(5, x, w);
    REQUIRE(x.size() == 5);
    double mass = 0.0, quartic = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mass += w[i];
        quartic += w[i] * std::pow(x[i], 4);
    }
    CHECK(mass == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(quartic == doctest::Approx(2.0 / 5.0).epsilon(1e-13)); // int x^4 on [-1,1]
}

TEST_CASE("mapped level nodes live in the domain and weights sum to one") {
    const ParamDomain dom({2.0}, {6.0});
    for (int level = 1; level <= 6; ++level) {
        const UnivariateLevel lvl = make_univariate_level(dom, 0, level);
        REQUIRE(static_cast<int>(lvl.nodes.size()) == level_to_knots(level));
        double mass = 0.0;
        for (std::size_t i = 0; i < lvl.nodes.size(); ++i) {
            CHECK(lvl.nodes[i] >= 2.0);
            CHECK(lvl.nodes[i] <= 6.0);
            mass += lvl.quad[i];
        }
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-14));
    }
    const UnivariateLevel mid = make_univariate_level(dom, 0, 1);
    CHECK(mid.nodes[0] == 4.0);
}

TEST_CASE("quadrature weights integrate monomials against the uniform density") {
    const ParamDomain dom({0.0}, {1.0});
    for (int level = 2; level <= 5; ++level) {
        const UnivariateLevel lvl = make_univariate_level(dom, 0, level);
        const int degree = static_cast<int>(lvl.nodes.size()) - 1;
        for (int p = 0; p <= degree; ++p) {
            double acc = 0.0;
            for (std::size_t i = 0; i < lvl.nodes.size(); ++i)
                acc += lvl.quad[i] * std::pow(lvl.nodes[i], p);
            const double exact = 1.0 / (p + 1); // int_0^1 x^p dx
            CHECK(acc == doctest::Approx(exact).epsilon(1e-13));
        }
    }
}

TEST_CASE("basis evaluation reproduces node hits and partitions unity") {
    const ParamDomain dom({0.0}, {1.0});
    const UnivariateLevel lvl = make_univariate_level(dom, 0, 3);
    const std::size_t count = lvl.nodes.size();
    std::vector<double> basis(count);

    for (std::size_t j = 0; j < count; ++j) {
        barycentric_basis(lvl, lvl.nodes[j], basis.data());
        for (std::size_t i = 0; i < count; ++i) CHECK(basis[i] == (i == j ? 1.0 : 0.0));
    }

    barycentric_basis(lvl, 0.377, basis.data());
    double sum = 0.0;
    for (double b : basis) sum += b;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("interpolation through the basis is exact for matching-degree polynomials") {
    const ParamDomain dom({-1.0}, {1.0});
    const UnivariateLevel lvl = make_univariate_level(dom, 0, 3); // 5 nodes, degree 4
    auto poly = [](double x) { return 3.0 * x * x * x * x - 2.0 * x * x + x - 0.25; };
    std::vector<double> basis(lvl.nodes.size());
    for (double x : {-0.9, -0.33, 0.0, 0.41, 0.77}) {
        barycentric_basis(lvl, x, basis.data());
        double acc = 0.0;
        for (std::size_t i = 0; i < lvl.nodes.size(); ++i) acc += basis[i] * poly(lvl.nodes[i]);
        CHECK(acc == doctest::Approx(poly(x)).epsilon(1e-12));
    }
}

TEST_CASE("level cache hands out stable references per dimension") {
    UnivariateLevelCache cache(ParamDomain({0.0, -2.0}, {1.0, 2.0}));
    const UnivariateLevel& a = cache.get(1, 3);
    CHECK(a.nodes.size() == 5);
    CHECK(a.nodes.front() == 2.0); // descending generation order, upper end first
    CHECK(a.nodes.back() == -2.0);
    const UnivariateLevel& b = cache.get(1, 3);
    CHECK(&a == &b);
    CHECK(cache.get(0, 1).nodes[0] == 0.5);
}
