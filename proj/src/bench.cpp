#include "mfuq/bench.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "mfuq/rng.hpp"
#include "mfuq/tensor_grid.hpp"

namespace mfuq {

namespace {

using nlohmann::json;

constexpr std::uint64_t kSharedTestSalt = 0x74657374ULL; // sampling-method testing set
constexpr std::uint64_t kMcStreamSalt = 0x6d6f6d6fULL;   // record-moment Monte Carlo stream
constexpr std::uint64_t kPdfStreamSalt = 0x70646673ULL;  // density-sample stream

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// ---------------------------------------------------------------------------
// Expression engine

enum OpKind : int {
    op_number = 0,
    op_variable,
    op_add,
    op_sub,
    op_mul,
    op_div,
    op_pow,
    op_neg,
    op_fn1,
    op_fn2,
};

enum FnId : int {
    f_sin = 0,
    f_cos,
    f_tan,
    f_asin,
    f_acos,
    f_atan,
    f_sinh,
    f_cosh,
    f_tanh,
    f_exp,
    f_log,
    f_log10,
    f_sqrt,
    f_abs,
    f_floor,
    f_ceil,
    f_pow,
    f_atan2,
    f_min,
    f_max,
};

struct FnEntry {
    const char* name;
    int id;
    int arity;
};

constexpr FnEntry kFunctions[] = {
    {"sin", f_sin, 1},     {"cos", f_cos, 1},     {"tan", f_tan, 1},     {"asin", f_asin, 1},
    {"acos", f_acos, 1},   {"atan", f_atan, 1},   {"sinh", f_sinh, 1},   {"cosh", f_cosh, 1},
    {"tanh", f_tanh, 1},   {"exp", f_exp, 1},     {"log", f_log, 1},     {"log10", f_log10, 1},
    {"sqrt", f_sqrt, 1},   {"abs", f_abs, 1},     {"floor", f_floor, 1}, {"ceil", f_ceil, 1},
    {"pow", f_pow, 2},     {"atan2", f_atan2, 2}, {"min", f_min, 2},     {"max", f_max, 2},
};

const FnEntry* find_function(const std::string& name) {
    for (const auto& f : kFunctions)
        if (name == f.name) return &f;
    return nullptr;
}

double apply_fn1(int id, double a) {
    switch (id) {
        case f_sin: return std::sin(a);
        case f_cos: return std::cos(a);
        case f_tan: return std::tan(a);
        case f_asin: return std::asin(a);
        case f_acos: return std::acos(a);
        case f_atan: return std::atan(a);
        case f_sinh: return std::sinh(a);
        case f_cosh: return std::cosh(a);
        case f_tanh: return std::tanh(a);
        case f_exp: return std::exp(a);
        case f_log: return std::log(a);
        case f_log10: return std::log10(a);
        case f_sqrt: return std::sqrt(a);
        case f_abs: return std::fabs(a);
        case f_floor: return std::floor(a);
        case f_ceil: return std::ceil(a);
        default: throw std::logic_error("expression: bad unary function id");
    }
}

double apply_fn2(int id, double a, double b) {
    switch (id) {
        case f_pow: return std::pow(a, b);
        case f_atan2: return std::atan2(a, b);
        case f_min: return std::min(a, b);
        case f_max: return std::max(a, b);
        default: throw std::logic_error("expression: bad binary function id");
    }
}

struct ExprToken {
    enum Type { number, ident, oper, lparen, rparen, comma } type;
    double value = 0.0;
    std::string name;
    char ch = 0;
    std::size_t pos = 0;
};

[[noreturn]] void expr_fail(const std::string& what, std::size_t pos) {
    throw std::invalid_argument("expression: " + what + " at position " + std::to_string(pos + 1));
}

std::vector<ExprToken> expr_lex(const std::string& s) {
    std::vector<ExprToken> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s.c_str() + i;
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(begin, &end);
            if (end == begin || errno == ERANGE) expr_fail("bad number", i);
            out.push_back({ExprToken::number, v, {}, 0, i});
            i += static_cast<std::size_t>(end - begin);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_'))
                ++j;
            out.push_back({ExprToken::ident, 0.0, s.substr(i, j - i), 0, i});
            i = j;
            continue;
        }
        if (c == '(') {
            out.push_back({ExprToken::lparen, 0.0, {}, c, i});
        } else if (c == ')') {
            out.push_back({ExprToken::rparen, 0.0, {}, c, i});
        } else if (c == ',') {
            out.push_back({ExprToken::comma, 0.0, {}, c, i});
        } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
            out.push_back({ExprToken::oper, 0.0, {}, c, i});
        } else {
            expr_fail(std::string("unexpected character '") + c + "'", i);
        }
        ++i;
    }
    return out;
}

struct PendingOp {
    int kind;     // op_* for operators, -1 for '(', -2 for a function call
    int prec;     // operator precedence
    bool rassoc;  // right-associative
    int fn_id;
    int fn_arity;
    std::size_t pos;
};

} // namespace

Expression Expression::parse(const std::string& text, std::size_t dims) {
    if (dims == 0) throw std::invalid_argument("expression: need at least one variable");
    Expression ex;
    ex.text_ = text;
    ex.dims_ = dims;

    const std::vector<ExprToken> tokens = expr_lex(text);
    if (tokens.empty()) throw std::invalid_argument("expression: empty input");

    std::vector<PendingOp> stack;
    auto emit_pending = [&](const PendingOp& p) {
        if (p.kind == -2)
            ex.program_.push_back({p.fn_arity == 1 ? op_fn1 : op_fn2, 0.0, p.fn_id});
        else
            ex.program_.push_back({p.kind, 0.0, 0});
    };

    bool expect_operand = true;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const ExprToken& t = tokens[i];
        switch (t.type) {
            case ExprToken::number:
                if (!expect_operand) expr_fail("operand where an operator was expected", t.pos);
                ex.program_.push_back({op_number, t.value, 0});
                expect_operand = false;
                break;
            case ExprToken::ident: {
                if (!expect_operand) expr_fail("name where an operator was expected", t.pos);
                const bool call = i + 1 < tokens.size() && tokens[i + 1].type == ExprToken::lparen;
                if (call) {
                    const FnEntry* fn = find_function(t.name);
                    if (!fn) expr_fail("unknown function '" + t.name + "'", t.pos);
                    stack.push_back({-2, 0, false, fn->id, fn->arity, t.pos});
                    stack.push_back({-1, 0, false, 0, 0, tokens[i + 1].pos});
                    ++i; // consume the '('
                    expect_operand = true;
                    break;
                }
                if (t.name == "pi") {
                    ex.program_.push_back({op_number, 3.141592653589793238462643, 0});
                } else if (t.name == "e") {
                    ex.program_.push_back({op_number, 2.718281828459045235360287, 0});
                } else if (t.name.size() > 1 && t.name[0] == 'y') {
                    std::size_t idx = 0;
                    for (std::size_t k = 1; k < t.name.size(); ++k) {
                        if (!std::isdigit(static_cast<unsigned char>(t.name[k])))
                            expr_fail("unknown name '" + t.name + "'", t.pos);
                        idx = idx * 10 + static_cast<std::size_t>(t.name[k] - '0');
                    }
                    if (idx < 1 || idx > dims)
                        expr_fail("variable '" + t.name + "' is outside y1..y" +
                                      std::to_string(dims),
                                  t.pos);
                    ex.program_.push_back({op_variable, 0.0, static_cast<int>(idx - 1)});
                } else {
                    expr_fail("unknown name '" + t.name + "'", t.pos);
                }
                expect_operand = false;
                break;
            }
            case ExprToken::lparen:
                if (!expect_operand) expr_fail("'(' where an operator was expected", t.pos);
                stack.push_back({-1, 0, false, 0, 0, t.pos});
                break;
            case ExprToken::rparen: {
                if (expect_operand) expr_fail("')' where an operand was expected", t.pos);
                while (!stack.empty() && stack.back().kind >= 0) {
                    emit_pending(stack.back());
                    stack.pop_back();
                }
                if (stack.empty()) expr_fail("unmatched ')'", t.pos);
                stack.pop_back(); // the '('
                if (!stack.empty() && stack.back().kind == -2) {
                    emit_pending(stack.back());
                    stack.pop_back();
                }
                expect_operand = false;
                break;
            }
            case ExprToken::comma: {
                if (expect_operand) expr_fail("',' where an operand was expected", t.pos);
                while (!stack.empty() && stack.back().kind >= 0) {
                    emit_pending(stack.back());
                    stack.pop_back();
                }
                if (stack.empty() || stack.back().kind != -1)
                    expr_fail("',' outside a function call", t.pos);
                expect_operand = true;
                break;
            }
            case ExprToken::oper: {
                if (expect_operand) {
                    if (t.ch == '+') break; // unary plus is a no-op
                    if (t.ch != '-') expr_fail("operator where an operand was expected", t.pos);
                    // Unary minus binds looser than '^': -y1^2 negates the square.
                    while (!stack.empty() && stack.back().kind >= 0 && stack.back().prec > 3) {
                        emit_pending(stack.back());
                        stack.pop_back();
                    }
                    stack.push_back({op_neg, 3, true, 0, 0, t.pos});
                    break;
                }
                int kind = 0, prec = 0;
                bool rassoc = false;
                switch (t.ch) {
                    case '+': kind = op_add; prec = 1; break;
                    case '-': kind = op_sub; prec = 1; break;
                    case '*': kind = op_mul; prec = 2; break;
                    case '/': kind = op_div; prec = 2; break;
                    case '^': kind = op_pow; prec = 4; rassoc = true; break;
                    default: expr_fail("bad operator", t.pos);
                }
                while (!stack.empty() && stack.back().kind >= 0 &&
                       (stack.back().prec > prec || (stack.back().prec == prec && !rassoc))) {
                    emit_pending(stack.back());
                    stack.pop_back();
                }
                stack.push_back({kind, prec, rassoc, 0, 0, t.pos});
                expect_operand = true;
                break;
            }
        }
    }
    if (expect_operand) throw std::invalid_argument("expression: ends where an operand was expected");
    while (!stack.empty()) {
        if (stack.back().kind < 0) expr_fail("unmatched '('", stack.back().pos);
        emit_pending(stack.back());
        stack.pop_back();
    }

    // Arity audit: replay the program against a depth counter.
    int depth = 0;
    for (const auto& op : ex.program_) {
        int need = 0;
        switch (op.kind) {
            case op_number:
            case op_variable: need = 0; break;
            case op_neg:
            case op_fn1: need = 1; break;
            default: need = 2; break;
        }
        if (depth < need) throw std::invalid_argument("expression: malformed (missing operand)");
        depth += 1 - need;
        if (depth > 256) throw std::invalid_argument("expression: too deeply nested");
    }
    if (depth != 1) throw std::invalid_argument("expression: malformed (dangling operands)");
    return ex;
}

double Expression::eval(const Point& y) const {
    if (y.size() != dims_) throw std::invalid_argument("expression: point dimension mismatch");
    double stack[256];
    int top = -1;
    for (const auto& op : program_) {
        switch (op.kind) {
            case op_number: stack[++top] = op.number; break;
            case op_variable: stack[++top] = y[static_cast<std::size_t>(op.slot)]; break;
            case op_add: --top; stack[top] += stack[top + 1]; break;
            case op_sub: --top; stack[top] -= stack[top + 1]; break;
            case op_mul: --top; stack[top] *= stack[top + 1]; break;
            case op_div: --top; stack[top] /= stack[top + 1]; break;
            case op_pow: --top; stack[top] = std::pow(stack[top], stack[top + 1]); break;
            case op_neg: stack[top] = -stack[top]; break;
            case op_fn1: stack[top] = apply_fn1(op.slot, stack[top]); break;
            case op_fn2: --top; stack[top] = apply_fn2(op.slot, stack[top], stack[top + 1]); break;
            default: throw std::logic_error("expression: bad opcode");
        }
    }
    return stack[0];
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

[[noreturn]] void cfg_fail(const std::string& what, int line) { throw ConfigError(what, line); }

double cfg_double(const std::string& v, int line, const std::string& key) {
    const char* begin = v.c_str();
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(begin, &end);
    if (end != begin + v.size() || v.empty() || errno == ERANGE)
        cfg_fail("key '" + key + "' needs a number, got '" + v + "'", line);
    return x;
}

long long cfg_int(const std::string& v, int line, const std::string& key) {
    const char* begin = v.c_str();
    char* end = nullptr;
    errno = 0;
    const long long x = std::strtoll(begin, &end, 10);
    if (end != begin + v.size() || v.empty() || errno == ERANGE)
        cfg_fail("key '" + key + "' needs an integer, got '" + v + "'", line);
    return x;
}

std::uint64_t cfg_u64(const std::string& v, int line, const std::string& key) {
    const char* begin = v.c_str();
    char* end = nullptr;
    errno = 0;
    const unsigned long long x = std::strtoull(begin, &end, 10);
    if (end != begin + v.size() || v.empty() || errno == ERANGE || v[0] == '-')
        cfg_fail("key '" + key + "' needs an unsigned integer, got '" + v + "'", line);
    return x;
}

bool cfg_bool(const std::string& v, int line, const std::string& key) {
    if (v == "true") return true;
    if (v == "false") return false;
    cfg_fail("key '" + key + "' needs true or false, got '" + v + "'", line);
}

std::vector<double> cfg_list(const std::string& v, int line, const std::string& key) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        const std::size_t comma = v.find(',', start);
        const std::string item =
            trim(comma == std::string::npos ? v.substr(start) : v.substr(start, comma - start));
        out.push_back(cfg_double(item, line, key));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

int level_for_points(int points) {
    for (int lvl = 1; lvl <= 30; ++lvl)
        if (level_to_knots(lvl) == points) return lvl;
    throw ConfigError("reference points_per_dim must be 1 or 2^k + 1, got " + std::to_string(points));
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.raw_text = text;

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    std::string section;
    std::set<std::string> seen;
    bool have_method = false, have_budget = false;
    std::map<int, std::pair<int, std::string>> expressions; // level -> (line, text)
    int lower_line = 0, upper_line = 0;

    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') cfg_fail("malformed section header", lineno);
            section = trim(line.substr(1, line.size() - 2));
            static const std::set<std::string> known = {"problem", "noise",  "experiment",
                                                        "misc",    "srbf",   "pso",
                                                        "reference", "mc",   "output"};
            if (!known.count(section)) cfg_fail("unknown section [" + section + "]", lineno);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) cfg_fail("expected key = value", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) cfg_fail("empty key", lineno);
        if (section.empty()) cfg_fail("key '" + key + "' appears before any section", lineno);
        if (!seen.insert(section + "." + key).second)
            cfg_fail("duplicate key '" + key + "' in [" + section + "]", lineno);

        if (section == "problem") {
            if (key == "kind") {
                if (value != "taylor-benchmark" && value != "expression")
                    cfg_fail("problem kind must be taylor-benchmark or expression", lineno);
                cfg.problem.kind = value;
            } else if (key == "dims") {
                const long long d = cfg_int(value, lineno, key);
                if (d < 1 || d > 16) cfg_fail("dims must be in 1..16", lineno);
                cfg.problem.dims = static_cast<std::size_t>(d);
            } else if (key == "levels") {
                const long long l = cfg_int(value, lineno, key);
                if (l < 1 || l > 64) cfg_fail("levels must be in 1..64", lineno);
                cfg.problem.levels = static_cast<int>(l);
            } else if (key == "cost_base") {
                cfg.problem.cost_base = cfg_double(value, lineno, key);
                if (!(cfg.problem.cost_base > 0.0)) cfg_fail("cost_base must be positive", lineno);
            } else if (key == "lower") {
                cfg.problem.lower = cfg_list(value, lineno, key);
                lower_line = lineno;
            } else if (key == "upper") {
                cfg.problem.upper = cfg_list(value, lineno, key);
                upper_line = lineno;
            } else if (key.rfind("expression_", 0) == 0) {
                const std::string suffix = key.substr(11);
                if (suffix.empty() ||
                    suffix.find_first_not_of("0123456789") != std::string::npos)
                    cfg_fail("unknown key '" + key + "' in [problem]", lineno);
                const int lvl = static_cast<int>(cfg_int(suffix, lineno, key));
                if (lvl < 1) cfg_fail("expression level must be at least 1", lineno);
                expressions[lvl] = {lineno, value};
            } else {
                cfg_fail("unknown key '" + key + "' in [problem]", lineno);
            }
        } else if (section == "noise") {
            if (key == "kind") {
                if (value == "none") cfg.noise.kind = NoiseKind::none;
                else if (value == "multiplicative") cfg.noise.kind = NoiseKind::multiplicative_uniform;
                else if (value == "additive") cfg.noise.kind = NoiseKind::additive_gaussian;
                else cfg_fail("noise kind must be none, multiplicative or additive", lineno);
            } else if (key == "amplitudes") {
                cfg.noise.amplitudes = cfg_list(value, lineno, key);
                for (double a : cfg.noise.amplitudes)
                    if (a < 0.0) cfg_fail("noise amplitudes must be nonnegative", lineno);
            } else if (key == "seed") {
                cfg.noise.seed = cfg_u64(value, lineno, key);
            } else {
                cfg_fail("unknown key '" + key + "' in [noise]", lineno);
            }
        } else if (section == "experiment") {
            if (key == "method") {
                if (value != "misc-quadrature-profit" && value != "misc-surrogate-profit" &&
                    value != "srbf")
                    cfg_fail("method must be misc-quadrature-profit, misc-surrogate-profit or srbf",
                             lineno);
                cfg.method = value;
                have_method = true;
            } else if (key == "budget") {
                cfg.budget = cfg_double(value, lineno, key);
                if (!(cfg.budget > 0.0)) cfg_fail("budget must be positive", lineno);
                have_budget = true;
            } else if (key == "max_iterations") {
                const long long m = cfg_int(value, lineno, key);
                if (m < 0) cfg_fail("max_iterations must be nonnegative", lineno);
                cfg.max_iterations = static_cast<int>(std::min<long long>(m, INT32_MAX));
            } else if (key == "seed") {
                cfg.seed = cfg_u64(value, lineno, key);
            } else {
                cfg_fail("unknown key '" + key + "' in [experiment]", lineno);
            }
        } else if (section == "misc") {
            if (key == "test_points") {
                const long long t = cfg_int(value, lineno, key);
                if (t < 2) cfg_fail("test_points must be at least 2", lineno);
                cfg.test_points = static_cast<std::size_t>(t);
            } else if (key == "moment_estimator") {
                if (value != "quadrature" && value != "mc")
                    cfg_fail("moment_estimator must be quadrature or mc", lineno);
                cfg.moment_estimator = value;
            } else {
                cfg_fail("unknown key '" + key + "' in [misc]", lineno);
            }
        } else if (section == "srbf") {
            if (key == "theta") {
                const long long t = cfg_int(value, lineno, key);
                if (t < 1) cfg_fail("theta must be positive", lineno);
                cfg.srbf.theta = static_cast<std::size_t>(t);
            } else if (key == "tau_min") {
                cfg.srbf.tau_min = cfg_double(value, lineno, key);
                if (!(cfg.srbf.tau_min > 0.0)) cfg_fail("tau_min must be positive", lineno);
            } else if (key == "tau_max") {
                cfg.srbf.tau_max = cfg_double(value, lineno, key);
            } else if (key == "mode") {
                if (value == "loocv") cfg.srbf.mode = SrbfMode::loocv;
                else if (value == "interpolation") cfg.srbf.mode = SrbfMode::interpolation;
                else cfg_fail("srbf mode must be loocv or interpolation", lineno);
            } else if (key == "normal_equations") {
                cfg.srbf.normal_equations = cfg_bool(value, lineno, key);
            } else if (key == "guessing_steps") {
                const long long g = cfg_int(value, lineno, key);
                if (g < 1) cfg_fail("guessing_steps must be at least 1", lineno);
                cfg.guessing_steps = static_cast<std::size_t>(g);
            } else {
                cfg_fail("unknown key '" + key + "' in [srbf]", lineno);
            }
        } else if (section == "pso") {
            if (key == "particles") {
                const long long p = cfg_int(value, lineno, key);
                if (p < 0) cfg_fail("particles must be nonnegative", lineno);
                cfg.pso.particles = static_cast<int>(p);
            } else if (key == "iterations") {
                const long long it = cfg_int(value, lineno, key);
                if (it < 1) cfg_fail("iterations must be positive", lineno);
                cfg.pso.iterations = static_cast<int>(it);
            } else if (key == "inertia") {
                cfg.pso.inertia = cfg_double(value, lineno, key);
            } else if (key == "cognitive") {
                cfg.pso.cognitive = cfg_double(value, lineno, key);
            } else if (key == "social") {
                cfg.pso.social = cfg_double(value, lineno, key);
            } else if (key == "velocity_clamp") {
                cfg.pso.velocity_clamp = cfg_double(value, lineno, key);
                if (!(cfg.pso.velocity_clamp > 0.0)) cfg_fail("velocity_clamp must be positive", lineno);
            } else {
                cfg_fail("unknown key '" + key + "' in [pso]", lineno);
            }
        } else if (section == "reference") {
            if (key == "points_per_dim") {
                cfg.reference_points = static_cast<int>(cfg_int(value, lineno, key));
            } else {
                cfg_fail("unknown key '" + key + "' in [reference]", lineno);
            }
        } else if (section == "mc") {
            if (key == "repetitions") {
                const long long r = cfg_int(value, lineno, key);
                if (r < 1) cfg_fail("repetitions must be positive", lineno);
                cfg.mc_repetitions = static_cast<int>(r);
            } else if (key == "samples") {
                const long long s = cfg_int(value, lineno, key);
                if (s < 2) cfg_fail("samples must be at least 2", lineno);
                cfg.mc_samples = static_cast<std::size_t>(s);
            } else {
                cfg_fail("unknown key '" + key + "' in [mc]", lineno);
            }
        } else if (section == "output") {
            if (key == "pdf_grid") {
                const long long g = cfg_int(value, lineno, key);
                if (g < 2) cfg_fail("pdf_grid must be at least 2", lineno);
                cfg.pdf_grid = static_cast<std::size_t>(g);
            } else {
                cfg_fail("unknown key '" + key + "' in [output]", lineno);
            }
        }
    }

    if (!have_method) throw ConfigError("missing required key [experiment] method");
    if (!have_budget) throw ConfigError("missing required key [experiment] budget");
    if (!(cfg.srbf.tau_min <= cfg.srbf.tau_max))
        throw ConfigError("srbf tau_min must not exceed tau_max");
    level_for_points(cfg.reference_points); // validates the grid form
    if (static_cast<int>(cfg.noise.amplitudes.size()) > cfg.problem.levels)
        throw ConfigError("more noise amplitudes than levels");

    if (cfg.problem.kind == "expression") {
        for (const auto& [lvl, entry] : expressions) {
            if (lvl > cfg.problem.levels)
                cfg_fail("expression_" + std::to_string(lvl) + " exceeds the level count",
                         entry.first);
        }
        for (int lvl = 1; lvl <= cfg.problem.levels; ++lvl) {
            const auto it = expressions.find(lvl);
            if (it == expressions.end())
                throw ConfigError("missing [problem] expression_" + std::to_string(lvl));
            try {
                Expression::parse(it->second.second, cfg.problem.dims);
            } catch (const std::invalid_argument& e) {
                cfg_fail(e.what(), it->second.first);
            }
            cfg.problem.expressions.push_back(it->second.second);
        }
        if (cfg.problem.lower.empty())
            cfg.problem.lower.assign(cfg.problem.dims, 0.0);
        if (cfg.problem.upper.empty())
            cfg.problem.upper.assign(cfg.problem.dims, 1.0);
        if (cfg.problem.lower.size() != cfg.problem.dims)
            cfg_fail("lower needs one bound per dimension", lower_line);
        if (cfg.problem.upper.size() != cfg.problem.dims)
            cfg_fail("upper needs one bound per dimension", upper_line);
        for (std::size_t n = 0; n < cfg.problem.dims; ++n)
            if (!(cfg.problem.lower[n] < cfg.problem.upper[n]))
                throw ConfigError("need lower < upper in every dimension");
    } else {
        if (!expressions.empty())
            cfg_fail("expression keys are only valid for expression problems",
                     expressions.begin()->second.first);
        if (lower_line || upper_line)
            cfg_fail("domain bounds are only valid for expression problems",
                     lower_line ? lower_line : upper_line);
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

// ---------------------------------------------------------------------------
// Model and reference construction

std::shared_ptr<FidelityModel> make_model(const ExperimentConfig& config, bool with_noise) {
    const NoiseSpec noise = with_noise ? config.noise : NoiseSpec{};
    if (config.problem.kind == "taylor-benchmark")
        return make_taylor_benchmark(config.problem.dims, config.problem.levels,
                                     config.problem.cost_base, noise);

    auto compiled = std::make_shared<std::vector<Expression>>();
    for (const auto& text : config.problem.expressions)
        compiled->push_back(Expression::parse(text, config.problem.dims));
    if (compiled->size() != static_cast<std::size_t>(config.problem.levels))
        throw ConfigError("expression problems need one expression per level");
    ParamDomain domain(config.problem.lower, config.problem.upper);
    auto evaluator = [compiled](int level, const Point& y) {
        return (*compiled)[static_cast<std::size_t>(level - 1)].eval(y);
    };
    return std::make_shared<FidelityModel>(std::move(domain), config.problem.levels, evaluator,
                                           config.problem.cost_base, noise);
}

ReferenceSolution build_reference(const ExperimentConfig& config) {
    auto model = make_model(config, false);
    const ParamDomain& domain = model->domain();
    const std::size_t dims = domain.dim();
    const int level = model->levels();
    const int beta = level_for_points(config.reference_points);

    ReferenceSolution ref;
    ref.level = level;
    ref.points_per_dim = config.reference_points;
    for (std::size_t n = 0; n < dims; ++n) {
        ref.lower.push_back(domain.lower(n));
        ref.upper.push_back(domain.upper(n));
    }

    std::vector<UnivariateLevel> axes;
    std::size_t total = 1;
    for (std::size_t n = 0; n < dims; ++n) {
        axes.push_back(make_univariate_level(domain, n, beta));
        ref.shape.push_back(static_cast<int>(axes.back().nodes.size()));
        total *= axes.back().nodes.size();
    }
    ref.values.reserve(total);
    std::vector<std::size_t> odo(dims, 0);
    Point y(dims);
    for (std::size_t flat = 0; flat < total; ++flat) {
        for (std::size_t n = 0; n < dims; ++n) y[n] = axes[n].nodes[odo[n]];
        ref.values.push_back(model->evaluate(level, y));
        for (std::size_t n = dims; n-- > 0;) {
            if (++odo[n] < axes[n].nodes.size()) break;
            odo[n] = 0;
        }
    }

    ref.moments = reference_moments(*model, level, config.reference_points, &ref.raw);
    return ref;
}

// ---------------------------------------------------------------------------
// Experiment driver

ExperimentResult run_experiment(const ExperimentConfig& config) {
    if (config.method.empty()) throw ConfigError("missing method");
    if (!(config.budget > 0.0)) throw ConfigError("budget must be positive");

    ExperimentResult res;
    res.reference = build_reference(config);

    auto ref_model = make_model(config, false);
    const int top_level = ref_model->levels();
    const int ref_beta = level_for_points(config.reference_points);
    const std::size_t dims = ref_model->domain().dim();
    const TensorSurrogate ref_surr(*ref_model, top_level,
                                   std::vector<int>(dims, ref_beta));

    auto model = make_model(config, true);
    const ParamDomain& domain = model->domain();
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    res.final_quadrature = MomentSet{nan, nan, nan, nan};

    if (config.method == "srbf") {
        SrbfRunOptions opt;
        opt.srbf = config.srbf;
        opt.pso = config.pso;
        opt.guessing_steps = config.guessing_steps;
        opt.stop.max_cost = config.budget;
        opt.stop.max_iterations = config.max_iterations;
        opt.seed = config.seed;

        const std::vector<Point> test_pts =
            domain.sample_many(derive_seed(config.seed, kSharedTestSalt), config.test_points);
        std::vector<Point> unit_test(test_pts.size(), Point(dims));
        for (std::size_t i = 0; i < test_pts.size(); ++i)
            for (std::size_t n = 0; n < dims; ++n)
                unit_test[i][n] = domain.to_unit(n, test_pts[i][n]);
        std::vector<double> ref_vals;
        ref_vals.reserve(test_pts.size());
        for (const auto& p : test_pts) ref_vals.push_back(ref_surr.evaluate(p));

        opt.metric_hook = [&](ConvergenceRecord& rec, const SrbfIterationState& st) {
            const auto batch = [&](const std::vector<Point>& pts) {
                std::vector<Point> unit(pts.size(), Point(dims));
                for (std::size_t i = 0; i < pts.size(); ++i)
                    for (std::size_t n = 0; n < dims; ++n)
                        unit[i][n] = domain.to_unit(n, pts[i][n]);
                return st.surrogate->predict_many(unit);
            };
            rec.moments = mc_moments(batch, domain, derive_seed(config.seed, kMcStreamSalt),
                                     config.mc_repetitions, config.mc_samples);
            rec.moment_errors = relative_moment_errors(rec.moments, res.reference.moments);
            const std::vector<double> vals = st.surrogate->predict_many(unit_test);
            const DiscreteErrors de = discrete_errors(vals, ref_vals);
            rec.err_l2 = de.l2;
            rec.err_linf = de.linf;
            rec.ks = ks_statistic(vals, ref_vals);
        };

        res.srbf = srbf_adaptive_run(model, opt);
        res.records = res.srbf.records;
        res.final_mc = res.records.back().moments;

        const std::vector<Point> pdf_pts =
            domain.sample_many(derive_seed(config.seed, kPdfStreamSalt), config.mc_samples);
        std::vector<Point> unit_pdf(pdf_pts.size(), Point(dims));
        for (std::size_t i = 0; i < pdf_pts.size(); ++i)
            for (std::size_t n = 0; n < dims; ++n)
                unit_pdf[i][n] = domain.to_unit(n, pdf_pts[i][n]);
        res.pdf_samples = res.srbf.surrogate->predict_many(unit_pdf);
        return res;
    }

    // MISC methods
    AdaptOptions opt;
    opt.profit = config.method == "misc-quadrature-profit" ? ProfitKind::quadrature
                                                           : ProfitKind::surrogate;
    opt.stop.max_cost = config.budget;
    opt.stop.max_iterations = config.max_iterations;
    opt.seed = config.seed;
    opt.test_point_count = config.test_points;
    opt.track_test_values = true;

    const bool use_mc = config.moment_estimator == "mc";
    std::vector<double> ref_vals; // filled on the first record
    opt.metric_hook = [&](ConvergenceRecord& rec, const MiscIterationState& st) {
        if (ref_vals.empty() && st.test_points) {
            ref_vals.reserve(st.test_points->size());
            for (const auto& p : *st.test_points) ref_vals.push_back(ref_surr.evaluate(p));
        }
        if (use_mc && st.approx) {
            const auto batch = [&](const std::vector<Point>& pts) {
                return st.approx->evaluate_many(pts);
            };
            rec.moments = mc_moments(batch, domain, derive_seed(config.seed, kMcStreamSalt),
                                     config.mc_repetitions, config.mc_samples);
        } else {
            rec.moments = standardize(st.raw_moments);
        }
        rec.moment_errors = relative_moment_errors(rec.moments, res.reference.moments);
        if (st.test_values && !ref_vals.empty()) {
            const DiscreteErrors de = discrete_errors(*st.test_values, ref_vals);
            rec.err_l2 = de.l2;
            rec.err_linf = de.linf;
            rec.ks = ks_statistic(*st.test_values, ref_vals);
        }
    };

    res.misc = misc_adapt(model, opt);
    res.is_misc = true;
    res.records = res.misc.records;
    res.final_quadrature = standardize(res.misc.approx->raw_moments());
    res.final_mc = mc_moments(
        [&](const std::vector<Point>& pts) { return res.misc.approx->evaluate_many(pts); },
        domain, derive_seed(config.seed, kMcStreamSalt), config.mc_repetitions, config.mc_samples);

    const std::vector<Point> pdf_pts =
        domain.sample_many(derive_seed(config.seed, kPdfStreamSalt), config.mc_samples);
    res.pdf_samples = res.misc.approx->evaluate_many(pdf_pts);
    return res;
}

// ---------------------------------------------------------------------------
// Serialization

void write_records_csv(std::ostream& os, const std::vector<ConvergenceRecord>& records) {
    os << kRecordsCsvHeader << "\n";
    for (const auto& r : records) {
        os << r.iteration << ',' << fmt_double(r.cumulative_cost) << ','
           << fmt_double(r.moments.mean) << ',' << fmt_double(r.moments.variance) << ','
           << fmt_double(r.moments.skewness) << ',' << fmt_double(r.moments.kurtosis) << ','
           << fmt_double(r.moment_errors[0]) << ',' << fmt_double(r.moment_errors[1]) << ','
           << fmt_double(r.moment_errors[2]) << ',' << fmt_double(r.moment_errors[3]) << ','
           << fmt_double(r.err_l2) << ',' << fmt_double(r.err_linf) << ',' << fmt_double(r.ks)
           << "\n";
    }
}

std::vector<ConvergenceRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open records file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty records file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kRecordsCsvHeader)
        throw ConfigError("records file '" + path + "' has an unexpected header");

    std::vector<ConvergenceRecord> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(comma == std::string::npos ? line.substr(start)
                                                        : line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 13)
            cfg_fail("records row needs 13 fields, got " + std::to_string(fields.size()), lineno);
        auto num = [&](std::size_t i) { return cfg_double(fields[i], lineno, "field"); };
        ConvergenceRecord r;
        r.iteration = static_cast<int>(cfg_int(fields[0], lineno, "iteration"));
        r.cumulative_cost = num(1);
        r.moments.mean = num(2);
        r.moments.variance = num(3);
        r.moments.skewness = num(4);
        r.moments.kurtosis = num(5);
        r.moment_errors = {num(6), num(7), num(8), num(9)};
        r.err_l2 = num(10);
        r.err_linf = num(11);
        r.ks = num(12);
        out.push_back(r);
    }
    return out;
}

namespace {

std::array<double, 11> record_metrics(const ConvergenceRecord& r) {
    return {r.moments.mean,     r.moments.variance, r.moments.skewness, r.moments.kurtosis,
            r.moment_errors[0], r.moment_errors[1], r.moment_errors[2], r.moment_errors[3],
            r.err_l2,           r.err_linf,         r.ks};
}

constexpr const char* kMetricNames[11] = {"mean",     "variance", "skewness", "kurtosis",
                                          "err_mean", "err_var",  "err_skew", "err_kurt",
                                          "err_l2",   "err_linf", "ks"};

json moments_json(const MomentSet& m) {
    json j;
    j["mean"] = m.mean;
    j["variance"] = m.variance;
    j["skewness"] = m.skewness;
    j["kurtosis"] = m.kurtosis;
    return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

json records_json(const std::vector<ConvergenceRecord>& records) {
    json arr = json::array();
    for (const auto& r : records) {
        json j;
        j["iteration"] = r.iteration;
        j["cost"] = r.cumulative_cost;
        const auto m = record_metrics(r);
        for (std::size_t i = 0; i < 11; ++i) j[kMetricNames[i]] = m[i];
        arr.push_back(std::move(j));
    }
    return arr;
}

} // namespace

void write_compare_csv(std::ostream& os, const std::vector<ConvergenceRecord>& a,
                       const std::vector<ConvergenceRecord>& b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("compare: both record lists must be non-empty");

    std::vector<double> grid;
    for (const auto& r : a) grid.push_back(r.cumulative_cost);
    for (const auto& r : b) grid.push_back(r.cumulative_cost);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    os << "cost";
    for (const auto* name : kMetricNames) os << ',' << name << "_a," << name << "_b";
    os << "\n";

    const auto nan = std::numeric_limits<double>::quiet_NaN();
    std::size_t ia = 0, ib = 0; // one past the last record at or below the cost
    for (double cost : grid) {
        while (ia < a.size() && a[ia].cumulative_cost <= cost) ++ia;
        while (ib < b.size() && b[ib].cumulative_cost <= cost) ++ib;
        const auto ma = ia > 0 ? record_metrics(a[ia - 1])
                               : std::array<double, 11>{nan, nan, nan, nan, nan, nan,
                                                        nan, nan, nan, nan, nan};
        const auto mb = ib > 0 ? record_metrics(b[ib - 1])
                               : std::array<double, 11>{nan, nan, nan, nan, nan, nan,
                                                        nan, nan, nan, nan, nan};
        os << fmt_double(cost);
        for (std::size_t i = 0; i < 11; ++i)
            os << ',' << fmt_double(ma[i]) << ',' << fmt_double(mb[i]);
        os << "\n";
    }
}

void write_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    {
        std::ostringstream csv;
        write_records_csv(csv, result.records);
        write_text_file(dir / "records.csv", csv.str());
    }
    {
        json j;
        j["schema"] = 1;
        j["records"] = records_json(result.records);
        write_text_file(dir / "records.json", j.dump(2) + "\n");
    }
    {
        json j;
        j["schema"] = 1;
        if (result.is_misc) {
            j["type"] = "misc";
            j["lower"] = json::array();
            j["upper"] = json::array();
            const ParamDomain& d = result.misc.approx->model().domain();
            for (std::size_t n = 0; n < d.dim(); ++n) {
                j["lower"].push_back(d.lower(n));
                j["upper"].push_back(d.upper(n));
            }
            json accepted = json::array();
            for (const auto& idx : result.misc.accepted) accepted.push_back(idx);
            j["accepted"] = std::move(accepted);
            json tensors = json::array();
            for (auto& t : result.misc.approx->dump_tensors()) {
                json jt;
                jt["index"] = t.index;
                jt["coefficient"] = t.coefficient;
                jt["shape"] = t.shape;
                jt["values"] = t.values;
                tensors.push_back(std::move(jt));
            }
            j["tensors"] = std::move(tensors);
        } else {
            j["type"] = "srbf";
            j["lower"] = result.reference.lower;
            j["upper"] = result.reference.upper;
            j["coordinates"] = "unit";
            const MfSrbfSurrogate& s = *result.srbf.surrogate;
            j["taus"] = *s.layer(0).taus();
            json layers = json::array();
            for (std::size_t i = 0; i < s.layer_count(); ++i) {
                json jl;
                jl["centers"] = s.layer(i).center_points();
                jl["weights"] = s.layer(i).weights_row_major();
                layers.push_back(std::move(jl));
            }
            j["layers"] = std::move(layers);
            j["k_star"] = result.srbf.k_star;
        }
        write_text_file(dir / "surrogate.json", j.dump(2) + "\n");
    }
    {
        json j;
        j["schema"] = 1;
        j["reference"] = moments_json(result.reference.moments);
        json fin;
        fin["cost"] = result.records.empty() ? 0.0 : result.records.back().cumulative_cost;
        fin["iterations"] = result.records.empty() ? 0
                                                   : result.records.back().iteration;
        fin["quadrature"] = result.is_misc ? moments_json(result.final_quadrature) : json();
        fin["mc"] = moments_json(result.final_mc);
        j["final"] = std::move(fin);
        write_text_file(dir / "summary.json", j.dump(2) + "\n");
    }
    {
        std::ostringstream pdf;
        pdf << "value,density\n";
        try {
            const std::vector<double> grid = kde_grid(result.pdf_samples, config.pdf_grid);
            const std::vector<double> dens = kde_pdf(result.pdf_samples, grid);
            for (std::size_t i = 0; i < grid.size(); ++i)
                pdf << fmt_double(grid[i]) << ',' << fmt_double(dens[i]) << "\n";
        } catch (const std::invalid_argument&) {
            // degenerate sample spread; emit the header only
        }
        write_text_file(dir / "pdf.csv", pdf.str());
    }
    {
        json j;
        j["schema"] = 1;
        j["version"] = kToolVersion;
        j["command"] = "run";
        j["method"] = config.method;
        j["seed"] = config.seed;
        j["budget"] = config.budget;
        j["config"] = config.raw_text;
        j["outputs"] = {"manifest.json", "pdf.csv",     "records.csv",
                        "records.json",  "summary.json", "surrogate.json"};
        write_text_file(dir / "manifest.json", j.dump(2) + "\n");
    }
}

void write_reference_outputs(const ReferenceSolution& reference, const ExperimentConfig& config,
                             const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    json j;
    j["schema"] = 1;
    j["type"] = "reference";
    j["level"] = reference.level;
    j["points_per_dim"] = reference.points_per_dim;
    j["lower"] = reference.lower;
    j["upper"] = reference.upper;
    j["shape"] = reference.shape;
    j["values"] = reference.values;
    j["moments"] = moments_json(reference.moments);
    j["raw"] = reference.raw.raw;
    write_text_file(dir / "reference.json", j.dump(2) + "\n");

    json m;
    m["schema"] = 1;
    m["version"] = kToolVersion;
    m["command"] = "reference";
    m["seed"] = config.seed;
    m["config"] = config.raw_text;
    m["outputs"] = {"manifest.json", "reference.json"};
    write_text_file(dir / "manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Surrogate dumps

struct LoadedSurrogate::Impl {
    std::string type;
    std::size_t dims = 0;
    std::vector<double> lower, upper;

    struct MiscTerm {
        int coefficient = 0;
        std::vector<int> shape;
        std::vector<UnivariateLevel> axes;
        std::vector<double> values;
    };
    std::vector<MiscTerm> terms;

    std::vector<double> taus;
    struct Layer {
        std::vector<Point> centers;
        std::vector<double> weights; // taus.size() x centers.size(), row-major
    };
    std::vector<Layer> layers;

    double evaluate(const Point& y) const;

    static double eval_misc_term(const MiscTerm& t, const Point& y) {
        const std::size_t dims = t.axes.size();
        std::vector<std::vector<double>> basis(dims);
        for (std::size_t n = 0; n < dims; ++n) {
            basis[n].resize(t.axes[n].nodes.size());
            barycentric_basis(t.axes[n], y[n], basis[n].data());
        }
        std::vector<std::size_t> odo(dims, 0);
        double acc = 0.0;
        for (std::size_t flat = 0; flat < t.values.size(); ++flat) {
            double w = 1.0;
            for (std::size_t n = 0; n < dims; ++n) w *= basis[n][odo[n]];
            acc += w * t.values[flat];
            for (std::size_t n = dims; n-- > 0;) {
                if (++odo[n] < basis[n].size()) break;
                odo[n] = 0;
            }
        }
        return acc;
    }
};

double LoadedSurrogate::Impl::evaluate(const Point& y) const {
    if (y.size() != dims) throw std::invalid_argument("surrogate: point dimension mismatch");
    if (type == "misc") {
        double acc = 0.0;
        for (const auto& t : terms) acc += t.coefficient * eval_misc_term(t, y);
        return acc;
    }
    // srbf layers predict in unit-cube coordinates
    Point u(dims);
    for (std::size_t n = 0; n < dims; ++n)
        u[n] = (y[n] - lower[n]) / (upper[n] - lower[n]);
    const std::size_t theta = taus.size();
    double acc = 0.0;
    for (const auto& layer : layers) {
        const std::size_t K = layer.centers.size();
        double layer_acc = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
            double s = 0.0;
            for (std::size_t n = 0; n < dims; ++n) {
                const double d = u[n] - layer.centers[j][n];
                s += d * d;
            }
            const double dist = std::sqrt(s);
            if (dist == 0.0) continue; // kernel value 0 regardless of tau
            const double logd = std::log(dist);
            for (std::size_t t = 0; t < theta; ++t)
                layer_acc += layer.weights[t * K + j] * std::exp(taus[t] * logd);
        }
        acc += layer_acc / static_cast<double>(theta);
    }
    return acc;
}

LoadedSurrogate::LoadedSurrogate(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open surrogate file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("surrogate file '" + path + "': " + e.what());
    }
    try {
        if (j.at("schema").get<int>() != 1)
            throw ConfigError("surrogate file '" + path + "': unsupported schema");
        auto impl = std::make_shared<Impl>();
        impl->type = j.at("type").get<std::string>();
        impl->lower = j.at("lower").get<std::vector<double>>();
        impl->upper = j.at("upper").get<std::vector<double>>();
        impl->dims = impl->lower.size();
        if (impl->dims == 0 || impl->upper.size() != impl->dims)
            throw ConfigError("surrogate file '" + path + "': bad domain bounds");
        ParamDomain domain(impl->lower, impl->upper);

        if (impl->type == "misc") {
            for (const auto& jt : j.at("tensors")) {
                Impl::MiscTerm term;
                term.coefficient = jt.at("coefficient").get<int>();
                term.shape = jt.at("shape").get<std::vector<int>>();
                term.values = jt.at("values").get<std::vector<double>>();
                const auto index = jt.at("index").get<std::vector<int>>();
                if (index.size() != impl->dims + 1 || term.shape.size() != impl->dims)
                    throw ConfigError("surrogate file '" + path + "': inconsistent tensor");
                std::size_t total = 1;
                for (std::size_t n = 0; n < impl->dims; ++n) {
                    const int beta = index[n + 1];
                    if (level_to_knots(beta) != term.shape[n])
                        throw ConfigError("surrogate file '" + path + "': shape/level mismatch");
                    term.axes.push_back(make_univariate_level(domain, n, beta));
                    total *= static_cast<std::size_t>(term.shape[n]);
                }
                if (term.values.size() != total)
                    throw ConfigError("surrogate file '" + path + "': bad tensor payload");
                impl->terms.push_back(std::move(term));
            }
        } else if (impl->type == "srbf") {
            impl->taus = j.at("taus").get<std::vector<double>>();
            if (impl->taus.empty())
                throw ConfigError("surrogate file '" + path + "': empty tau list");
            for (const auto& jl : j.at("layers")) {
                Impl::Layer layer;
                for (const auto& jc : jl.at("centers")) {
                    Point c = jc.get<Point>();
                    if (c.size() != impl->dims)
                        throw ConfigError("surrogate file '" + path + "': bad center");
                    layer.centers.push_back(std::move(c));
                }
                layer.weights = jl.at("weights").get<std::vector<double>>();
                if (layer.centers.empty() ||
                    layer.weights.size() != impl->taus.size() * layer.centers.size())
                    throw ConfigError("surrogate file '" + path + "': bad layer payload");
                impl->layers.push_back(std::move(layer));
            }
            if (impl->layers.empty())
                throw ConfigError("surrogate file '" + path + "': no layers");
        } else {
            throw ConfigError("surrogate file '" + path + "': unknown type '" + impl->type + "'");
        }
        impl_ = std::move(impl);
    } catch (const json::exception& e) {
        throw ConfigError("surrogate file '" + path + "': " + e.what());
    }
}

std::size_t LoadedSurrogate::dims() const { return impl_->dims; }
const std::string& LoadedSurrogate::type() const { return impl_->type; }
double LoadedSurrogate::evaluate(const Point& y) const { return impl_->evaluate(y); }

std::vector<double> LoadedSurrogate::evaluate_many(const std::vector<Point>& pts) const {
    std::vector<double> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(impl_->evaluate(p));
    return out;
}

std::vector<Point> read_points_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open points file '" + path + "'");
    std::vector<Point> out;
    std::string line;
    int lineno = 0;
    std::size_t dims = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        Point p;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::string item =
                trim(comma == std::string::npos ? line.substr(start)
                                                : line.substr(start, comma - start));
            p.push_back(cfg_double(item, lineno, "coordinate"));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (dims == 0) dims = p.size();
        if (p.size() != dims)
            cfg_fail("points row has " + std::to_string(p.size()) + " coordinates, expected " +
                         std::to_string(dims),
                     lineno);
        out.push_back(std::move(p));
    }
    if (out.empty()) throw ConfigError("points file '" + path + "' contains no points");
    return out;
}

} // namespace mfuq
