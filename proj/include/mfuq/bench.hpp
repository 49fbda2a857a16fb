#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mfuq/errors.hpp"
#include "mfuq/metrics.hpp"
#include "mfuq/misc.hpp"
#include "mfuq/model.hpp"
#include "mfuq/pso.hpp"
#include "mfuq/srbf.hpp"

namespace mfuq {

inline constexpr const char* kToolVersion = "0.1.0";

// Exact column schema of every records CSV this tool reads or writes.
inline constexpr const char* kRecordsCsvHeader =
    "iteration,cost,mean,variance,skewness,kurtosis,"
    "err_mean,err_var,err_skew,err_kurt,err_l2,err_linf,ks";

// Compiled arithmetic expression in the variables y1..yN. Supports
// + - * / ^, parentheses, the constants pi and e, and the usual scalar
// functions (sin, cos, tan, asin, acos, atan, sinh, cosh, tanh, exp, log,
// log10, sqrt, abs, floor, ceil, plus two-argument pow, atan2, min, max).
class Expression {
public:
    static Expression parse(const std::string& text, std::size_t dims);

    double eval(const Point& y) const;
    const std::string& text() const { return text_; }
    std::size_t dims() const { return dims_; }

private:
    struct Op {
        int kind = 0;      // opcode
        double number = 0; // literal payload
        int slot = 0;      // variable index or function id
    };

    std::string text_;
    std::size_t dims_ = 0;
    std::vector<Op> program_;
};

struct ProblemConfig {
    std::string kind = "taylor-benchmark"; // or "expression"
    std::size_t dims = 2;
    int levels = 6;
    double cost_base = 8.0;
    std::vector<double> lower;              // expression problems; default 0
    std::vector<double> upper;              // expression problems; default 1
    std::vector<std::string> expressions;   // one per level
};

struct ExperimentConfig {
    ProblemConfig problem;
    NoiseSpec noise;

    std::string method; // misc-quadrature-profit | misc-surrogate-profit | srbf
    double budget = 0.0;
    int max_iterations = std::numeric_limits<int>::max();
    std::uint64_t seed = 0;

    std::size_t test_points = 10000;
    std::string moment_estimator = "quadrature"; // or "mc"; srbf always samples

    SrbfOptions srbf;
    std::size_t guessing_steps = 1;
    PsoOptions pso;

    int reference_points = 33; // per-dimension reference grid size
    int mc_repetitions = 10;
    std::size_t mc_samples = 10000;
    std::size_t pdf_grid = 401;

    std::string raw_text; // config file echo, reproduced in the manifest
};

// Strict section/key parsing: unknown sections, unknown keys, duplicates and
// malformed values all raise ConfigError carrying the offending line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Model instance described by the config; with_noise = false yields the
// clean model used for reference solutions.
std::shared_ptr<FidelityModel> make_model(const ExperimentConfig& config, bool with_noise);

// Tensor-grid snapshot of the highest fidelity plus its quadrature moments.
struct ReferenceSolution {
    int level = 0;
    int points_per_dim = 0;
    std::vector<double> lower, upper;
    std::vector<int> shape;
    std::vector<double> values; // row-major, first dimension slowest
    MomentSet moments;
    RawMoments raw;
};

ReferenceSolution build_reference(const ExperimentConfig& config);

struct ExperimentResult {
    bool is_misc = false;
    std::vector<ConvergenceRecord> records;
    ReferenceSolution reference;
    MiscRunResult misc;
    SrbfRunResult srbf;
    MomentSet final_quadrature;      // misc only; NaN components otherwise
    MomentSet final_mc;              // Monte Carlo estimate of the final surrogate
    std::vector<double> pdf_samples; // final-surrogate samples behind pdf.csv
};

// Runs the configured method against its budget, attaching per-iteration
// moments and reference-based error metrics to every record.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Serialization. write_outputs produces records.csv, records.json,
// surrogate.json, summary.json, pdf.csv and manifest.json under out_dir.
void write_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::string& out_dir);
void write_reference_outputs(const ReferenceSolution& reference, const ExperimentConfig& config,
                             const std::string& out_dir);

void write_records_csv(std::ostream& os, const std::vector<ConvergenceRecord>& records);
std::vector<ConvergenceRecord> read_records_csv(const std::string& path);

// Cost-aligned side-by-side table: union of the two cost grids, metrics
// carried forward from the last record at or below each cost.
void write_compare_csv(std::ostream& os, const std::vector<ConvergenceRecord>& a,
                       const std::vector<ConvergenceRecord>& b);

// Surrogate dumps written by write_outputs can be reloaded and evaluated
// without the model that produced them.
class LoadedSurrogate {
public:
    explicit LoadedSurrogate(const std::string& path);

    std::size_t dims() const;
    const std::string& type() const;
    double evaluate(const Point& y) const;
    std::vector<double> evaluate_many(const std::vector<Point>& pts) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

// Headerless CSV of evaluation points, one comma-separated row per point.
std::vector<Point> read_points_csv(const std::string& path);

} // namespace mfuq
