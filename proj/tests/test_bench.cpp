#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mfuq/bench.hpp"

using namespace mfuq;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("mfuq_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string minimal_config(const std::string& extra = "") {
    return "[problem]\n"
           "kind = taylor-benchmark\n"
           "dims = 2\n"
           "levels = 6\n"
           "[experiment]\n"
           "method = misc-surrogate-profit\n"
           "budget = 2000\n"
           "seed = 3\n" +
           extra;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int config_error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

} // namespace

TEST_CASE("expressions evaluate arithmetic, precedence and functions") {
    CHECK(Expression::parse("1 + 2 * 3", 1).eval({0.0}) == 7.0);
    CHECK(Expression::parse("(1 + 2) * 3", 1).eval({0.0}) == 9.0);
    CHECK(Expression::parse("2 ^ 3 ^ 2", 1).eval({0.0}) == 512.0); // right-assoc
    CHECK(Expression::parse("-y1^2", 1).eval({3.0}) == -9.0);      // negate the square
    CHECK(Expression::parse("(-y1)^2", 1).eval({3.0}) == 9.0);
    CHECK(Expression::parse("2 - -3", 1).eval({0.0}) == 5.0);
    CHECK(Expression::parse("10 / 4", 1).eval({0.0}) == 2.5);
    CHECK(Expression::parse("sin(pi / 2)", 1).eval({0.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(Expression::parse("log(e)", 1).eval({0.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(Expression::parse("pow(y1, 3)", 1).eval({2.0}) == 8.0);
    CHECK(Expression::parse("atan2(1, 1)", 1).eval({0.0}) ==
          doctest::Approx(0.7853981633974483).epsilon(1e-15));
    CHECK(Expression::parse("max(y1, y2) + min(y1, y2)", 2).eval({0.3, 0.9}) ==
          doctest::Approx(1.2).epsilon(1e-15));
    CHECK(Expression::parse("sqrt(abs(-16))", 1).eval({0.0}) == 4.0);
    CHECK(Expression::parse("y1*y2 - y2", 2).eval({2.0, 5.0}) == 5.0);
}

TEST_CASE("expression parsing rejects malformed input") {
    CHECK_THROWS_AS(Expression::parse("", 1), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("1 +", 1), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("(1 + 2", 1), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("1 + 2)", 1), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("y3", 2), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("bogus(1)", 1), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("sin()", 1), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("sin(1, 2)", 1), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("pow(1)", 1), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("1 2", 1), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("y1 @ 2", 1), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("frog", 1), std::invalid_argument);
}

TEST_CASE("config parsing fills defaults and echoes the text") {
    const std::string text = minimal_config();
    const ExperimentConfig cfg = parse_config(text);
    CHECK(cfg.problem.kind == "taylor-benchmark");
    CHECK(cfg.problem.dims == 2);
    CHECK(cfg.problem.levels == 6);
    CHECK(cfg.method == "misc-surrogate-profit");
    CHECK(cfg.budget == 2000.0);
    CHECK(cfg.seed == 3);
    CHECK(cfg.test_points == 10000);
    CHECK(cfg.reference_points == 33);
    CHECK(cfg.raw_text == text);
}

TEST_CASE("config errors carry one-based line numbers") {
    CHECK(config_error_line("[problem]\nbogus = 1\n") == 2);
    CHECK(config_error_line("[bogus]\n") == 1);
    CHECK(config_error_line("key = 1\n") == 1); // before any section
    CHECK(config_error_line("[problem]\ndims = 2\ndims = 3\n") == 3);
    CHECK(config_error_line("[problem]\ndims = frog\n") == 2);
    CHECK(config_error_line("[problem]\ndims\n") == 2);
    CHECK(config_error_line("# comment\n[experiment]\nbudget = -5\n") == 3);
    CHECK(config_error_line("[experiment]\nmethod = nonsense\n") == 2);
    // structural errors without a specific line report zero
    CHECK(config_error_line("[problem]\nkind = taylor-benchmark\n") == 0); // no method
}

TEST_CASE("taylor problems reject expression-only keys") {
    const std::string bad = "[problem]\n"
                            "kind = taylor-benchmark\n"
                            "expression_1 = y1\n"
                            "[experiment]\n"
                            "method = srbf\n"
                            "budget = 1\n";
    CHECK(config_error_line(bad) == 3);
    const std::string bad2 = "[problem]\n"
                             "kind = taylor-benchmark\n"
                             "lower = 0, 0\n"
                             "[experiment]\n"
                             "method = srbf\n"
                             "budget = 1\n";
    CHECK(config_error_line(bad2) == 3);
}

TEST_CASE("expression problems require one expression per level") {
    const std::string base = "[problem]\n"
                             "kind = expression\n"
                             "dims = 1\n"
                             "levels = 2\n"
                             "expression_1 = y1\n";
    const std::string exp_tail = "[experiment]\nmethod = srbf\nbudget = 1\n";
    CHECK_THROWS_AS(parse_config(base + exp_tail), ConfigError); // expression_2 missing
    CHECK_NOTHROW(parse_config(base + "expression_2 = y1 * y1\n" + exp_tail));
    // malformed expression points at its own line
    CHECK(config_error_line(base + "expression_2 = y1 +\n" + exp_tail) == 6);
    // out-of-range level suffix
    CHECK(config_error_line(base + "expression_2 = y1\nexpression_3 = y1\n" + exp_tail) == 7);
}

TEST_CASE("expression models honor custom domains") {
    const std::string text = "[problem]\n"
                             "kind = expression\n"
                             "dims = 1\n"
                             "levels = 2\n"
                             "expression_1 = y1\n"
                             "expression_2 = y1 * y1\n"
                             "lower = 2\n"
                             "upper = 4\n"
                             "[experiment]\n"
                             "method = srbf\n"
                             "budget = 1\n";
    const ExperimentConfig cfg = parse_config(text);
    auto model = make_model(cfg, true);
    CHECK(model->domain().lower(0) == 2.0);
    CHECK(model->domain().upper(0) == 4.0);
    CHECK(model->evaluate(1, {3.0}) == 3.0);
    CHECK(model->evaluate(2, {3.0}) == 9.0);
    CHECK_THROWS(model->evaluate(1, {1.0})); // outside the domain
}

TEST_CASE("reference grids carry exact quadrature moments") {
    const std::string text = "[problem]\n"
                             "kind = expression\n"
                             "dims = 1\n"
                             "levels = 1\n"
                             "expression_1 = y1\n"
                             "[experiment]\n"
                             "method = srbf\n"
                             "budget = 1\n"
                             "[reference]\n"
                             "points_per_dim = 9\n";
    const ReferenceSolution ref = build_reference(parse_config(text));
    CHECK(ref.level == 1);
    CHECK(ref.points_per_dim == 9);
    CHECK(ref.shape == std::vector<int>{9});
    REQUIRE(ref.values.size() == 9);
    CHECK(ref.values.front() == 1.0); // descending node order
    CHECK(ref.values.back() == 0.0);
    CHECK(ref.moments.mean == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(ref.moments.variance == doctest::Approx(1.0 / 12.0).epsilon(1e-13));
    CHECK(ref.moments.kurtosis == doctest::Approx(1.8).epsilon(1e-13));
}

TEST_CASE("records survive a CSV round trip unchanged") {
    std::vector<ConvergenceRecord> records(3);
    records[0].iteration = 0;
    records[0].cumulative_cost = 1.0;
    records[0].moments = {0.1234567890123456789, 1e-17, -3.5, 2.0};
    records[0].moment_errors = {0.5, std::numeric_limits<double>::quiet_NaN(), 1e300, 0.0};
    records[0].err_l2 = 0.25;
    records[0].err_linf = 0.5;
    records[0].ks = 0.125;
    records[1].iteration = 1;
    records[1].cumulative_cost = 9.0;
    records[2].iteration = 2;
    records[2].cumulative_cost = 73.5;

    TempDir tmp;
    {
        std::ofstream out(tmp.file("records.csv"), std::ios::binary);
        write_records_csv(out, records);
    }
    const auto loaded = read_records_csv(tmp.file("records.csv"));
    REQUIRE(loaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].iteration == records[i].iteration);
        CHECK(loaded[i].cumulative_cost == records[i].cumulative_cost);
        CHECK(loaded[i].moments.mean == records[i].moments.mean);
        CHECK(loaded[i].moments.variance == records[i].moments.variance);
        CHECK(loaded[i].err_l2 == records[i].err_l2);
    }
    CHECK(loaded[0].moment_errors[0] == 0.5);
    CHECK(std::isnan(loaded[0].moment_errors[1]));
    CHECK(loaded[0].moment_errors[2] == 1e300);

    std::ofstream bad(tmp.file("bad.csv"), std::ios::binary);
    bad << "iteration,cost\n0,1\n";
    bad.close();
    CHECK_THROWS_AS(read_records_csv(tmp.file("bad.csv")), ConfigError);
    CHECK_THROWS_AS(read_records_csv(tmp.file("missing.csv")), ConfigError);
}

TEST_CASE("comparing a run against itself collapses both columns") {
    std::vector<ConvergenceRecord> records(2);
    records[0].iteration = 0;
    records[0].cumulative_cost = 5.0;
    records[0].moments = {1.0, 2.0, 3.0, 4.0};
    records[1].iteration = 1;
    records[1].cumulative_cost = 10.0;
    records[1].moments = {1.5, 2.5, 3.5, 4.5};

    std::ostringstream out;
    write_compare_csv(out, records, records);
    std::istringstream in(out.str());
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    CHECK(header.rfind("cost,mean_a,mean_b,", 0) == 0);
    CHECK(row1.rfind("5,1,1,2,2,", 0) == 0);
    CHECK(row2.rfind("10,1.5,1.5,2.5,2.5,", 0) == 0);
    std::string extra;
    CHECK_FALSE(std::getline(in, extra)); // two shared costs, two rows

    CHECK_THROWS_AS(write_compare_csv(out, {}, records), std::invalid_argument);
}

TEST_CASE("compare carries the last value forward across a sparser grid") {
    std::vector<ConvergenceRecord> a(2), b(1);
    a[0].cumulative_cost = 1.0;
    a[0].moments.mean = 10.0;
    a[1].cumulative_cost = 3.0;
    a[1].moments.mean = 30.0;
    b[0].cumulative_cost = 2.0;
    b[0].moments.mean = 20.0;

    std::ostringstream out;
    write_compare_csv(out, a, b);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line); // header
    std::getline(in, line);
    CHECK(line.rfind("1,10,nan,", 0) == 0); // b has no record at cost 1 yet
    std::getline(in, line);
    CHECK(line.rfind("2,10,20,", 0) == 0); // a carries cost-1 value forward
    std::getline(in, line);
    CHECK(line.rfind("3,30,20,", 0) == 0);
}

TEST_CASE("a misc experiment writes every output and reloads exactly") {
    ExperimentConfig cfg = parse_config(minimal_config("[misc]\ntest_points = 300\n"
                                                       "[mc]\nrepetitions = 2\nsamples = 500\n"
                                                       "[output]\npdf_grid = 41\n"));
    const ExperimentResult res = run_experiment(cfg);
    REQUIRE(res.is_misc);
    REQUIRE(!res.records.empty());
    CHECK(res.records.front().cumulative_cost == 1.0);
    CHECK(std::isfinite(res.records.back().err_l2));

    TempDir tmp;
    write_outputs(res, cfg, tmp.path.string());
    for (const char* name : {"records.csv", "records.json", "surrogate.json", "summary.json",
                             "pdf.csv", "manifest.json"})
        CHECK(fs::exists(tmp.path / name));

    // the stored surrogate reproduces the in-memory combination exactly
    const LoadedSurrogate loaded(tmp.file("surrogate.json"));
    CHECK(loaded.type() == "misc");
    CHECK(loaded.dims() == 2);
    const auto pts = res.misc.approx->model().domain().sample_many(17, 50);
    for (const auto& p : pts)
        CHECK(loaded.evaluate(p) == doctest::Approx(res.misc.approx->evaluate(p)).epsilon(1e-12));

    const std::string manifest = slurp(tmp.file("manifest.json"));
    CHECK(manifest.find("\"seed\": 3") != std::string::npos);
    CHECK(manifest.find("misc-surrogate-profit") != std::string::npos);
}

TEST_CASE("an srbf experiment produces a reloadable layered surrogate") {
    ExperimentConfig cfg = parse_config(
        "[problem]\nkind = taylor-benchmark\ndims = 2\nlevels = 3\n"
        "[experiment]\nmethod = srbf\nbudget = 1e9\nmax_iterations = 2\nseed = 21\n"
        "[misc]\ntest_points = 200\n"
        "[srbf]\ntheta = 30\n"
        "[pso]\nparticles = 8\niterations = 25\n"
        "[mc]\nrepetitions = 2\nsamples = 400\n");
    const ExperimentResult res = run_experiment(cfg);
    CHECK_FALSE(res.is_misc);
    REQUIRE(res.records.size() == 3);
    CHECK(res.records.front().cumulative_cost == 5.0 * (1.0 + 8.0 + 64.0));
    CHECK(std::isnan(res.final_quadrature.mean));
    CHECK(std::isfinite(res.final_mc.mean));

    TempDir tmp;
    write_outputs(res, cfg, tmp.path.string());
    const LoadedSurrogate loaded(tmp.file("surrogate.json"));
    CHECK(loaded.type() == "srbf");
    const ParamDomain& dom = ParamDomain::unit_cube(2);
    const auto pts = dom.sample_many(5, 40);
    for (const auto& p : pts) {
        // loader takes domain coordinates; the stack lives on the unit cube
        CHECK(loaded.evaluate(p) == doctest::Approx(res.srbf.surrogate->predict(p)).epsilon(1e-10));
    }
}

TEST_CASE("reruns of the same config produce byte-identical tables") {
    ExperimentConfig cfg = parse_config(minimal_config("[misc]\ntest_points = 250\n"
                                                       "[mc]\nrepetitions = 2\nsamples = 300\n"));
    TempDir ta, tb;
    write_outputs(run_experiment(cfg), cfg, ta.path.string());
    write_outputs(run_experiment(cfg), cfg, tb.path.string());
    for (const char* name : {"records.csv", "records.json", "surrogate.json", "summary.json",
                             "pdf.csv", "manifest.json"})
        CHECK(slurp(ta.file(name)) == slurp(tb.file(name)));
}

TEST_CASE("points files reject ragged rows") {
    TempDir tmp;
    {
        std::ofstream out(tmp.file("pts.csv"), std::ios::binary);
        out << "0.1,0.2\n0.3,0.4\n";
    }
    const auto pts = read_points_csv(tmp.file("pts.csv"));
    REQUIRE(pts.size() == 2);
    CHECK(pts[1] == Point{0.3, 0.4});
    {
        std::ofstream out(tmp.file("ragged.csv"), std::ios::binary);
        out << "0.1,0.2\n0.3\n";
    }
    CHECK_THROWS_AS(read_points_csv(tmp.file("ragged.csv")), ConfigError);
    {
        std::ofstream out(tmp.file("empty.csv"), std::ios::binary);
    }
    CHECK_THROWS_AS(read_points_csv(tmp.file("empty.csv")), ConfigError);
}
