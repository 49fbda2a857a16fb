#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mfuq/bench.hpp"
#include "mfuq/errors.hpp"

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

int dispatch(const CLI::App& app, const std::string& config_path, const std::string& out_dir,
             std::uint64_t seed, bool seed_given, double budget, bool budget_given,
             const std::vector<std::string>& inputs) {
    if (app.got_subcommand("reference")) {
        const mfuq::ExperimentConfig cfg = mfuq::parse_config_file(config_path);
        const mfuq::ReferenceSolution ref = mfuq::build_reference(cfg);
        mfuq::write_reference_outputs(ref, cfg, out_dir);
        std::cout << "reference level " << ref.level << ", " << ref.points_per_dim
                  << " points per dimension -> " << (fs::path(out_dir) / "reference.json").string()
                  << "\n";
        return 0;
    }
    if (app.got_subcommand("run")) {
        mfuq::ExperimentConfig cfg = mfuq::parse_config_file(config_path);
        if (seed_given) cfg.seed = seed;
        if (budget_given) {
            if (!(budget > 0.0)) throw mfuq::ConfigError("--budget must be positive");
            cfg.budget = budget;
        }
        const mfuq::ExperimentResult res = mfuq::run_experiment(cfg);
        mfuq::write_outputs(res, cfg, out_dir);
        const auto& last = res.records.back();
        std::cout << cfg.method << ": " << last.iteration << " iterations, cost "
                  << last.cumulative_cost << ", err_l2 " << last.err_l2 << " -> "
                  << (fs::path(out_dir) / "records.csv").string() << "\n";
        return 0;
    }
    if (app.got_subcommand("compare")) {
        const auto a = mfuq::read_records_csv(inputs.at(0));
        const auto b = mfuq::read_records_csv(inputs.at(1));
        std::ostringstream csv;
        mfuq::write_compare_csv(csv, a, b);
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "compare.csv", csv.str());
        std::cout << "aligned " << a.size() << " + " << b.size() << " records -> "
                  << (fs::path(out_dir) / "compare.csv").string() << "\n";
        return 0;
    }
    // eval-surrogate
    const mfuq::LoadedSurrogate surrogate(inputs.at(0));
    const std::vector<mfuq::Point> points = mfuq::read_points_csv(inputs.at(1));
    if (points.front().size() != surrogate.dims())
        throw mfuq::ConfigError("points have " + std::to_string(points.front().size()) +
                                " coordinates but the surrogate expects " +
                                std::to_string(surrogate.dims()));
    const std::vector<double> values = surrogate.evaluate_many(points);
    std::ostringstream csv;
    for (std::size_t n = 0; n < surrogate.dims(); ++n) csv << 'y' << n + 1 << ',';
    csv << "value\n";
    char buf[40];
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (double c : points[i]) {
            std::snprintf(buf, sizeof buf, "%.17g", c);
            csv << buf << ',';
        }
        std::snprintf(buf, sizeof buf, "%.17g", values[i]);
        csv << buf << "\n";
    }
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "values.csv", csv.str());
    std::cout << "evaluated " << points.size() << " points -> "
              << (fs::path(out_dir) / "values.csv").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-fidelity forward uncertainty quantification toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    double budget = 0.0;
    std::vector<std::string> inputs;

    CLI::App* ref = app.add_subcommand("reference", "Tabulate the highest fidelity on a dense "
                                                    "grid and store its moments");
    ref->add_option("--config", config_path, "experiment config file")->required();
    ref->add_option("--out", out_dir, "output directory (default: current)");

    CLI::App* run = app.add_subcommand("run", "Run the configured method against its budget and "
                                              "write convergence tables");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output directory (default: current)");
    CLI::Option* seed_opt = run->add_option("--seed", seed, "override the config seed");
    CLI::Option* budget_opt = run->add_option("--budget", budget, "override the config budget");

    CLI::App* cmp = app.add_subcommand("compare", "Align two records.csv files on a shared "
                                                  "cost grid");
    cmp->add_option("records", inputs, "two records.csv files")->expected(2);
    cmp->add_option("--out", out_dir, "output directory (default: current)");

    CLI::App* ev = app.add_subcommand("eval-surrogate", "Evaluate a stored surrogate.json at "
                                                        "points from a CSV file");
    ev->add_option("files", inputs, "surrogate.json followed by points.csv")->expected(2);
    ev->add_option("--out", out_dir, "output directory (default: current)");
    (void)cmp;
    (void)ev;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return dispatch(app, config_path, out_dir, seed, seed_opt->count() > 0, budget,
                        budget_opt->count() > 0, inputs);
    } catch (const mfuq::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
