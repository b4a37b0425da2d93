#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "l1adapt/bounds.hpp"
#include "l1adapt/controller.hpp"
#include "l1adapt/error.hpp"
#include "l1adapt/l1norm.hpp"
#include "l1adapt/lti.hpp"
#include "l1adapt/plant.hpp"
#include "l1adapt/signals.hpp"
#include "l1adapt/sim.hpp"

namespace l1adapt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitSchema = 2;
inline constexpr int kExitDiverged = 3;

// ============================================================================
// Scenario
// ============================================================================

struct Scenario {
    plant::PlantSpec plant;
    plant::UncertaintySets sets;
    double k = 60.0;
    double gamma_c = 1e4;
    std::vector<double> D_num{1.0};      // descending powers of s
    std::vector<double> D_den{1.0, 0.0}; // descending powers of s
    Matrix Q;
    double projection_eps = controller::kDefaultProjectionEps;
    controller::InitialEstimates initial;
    std::string r_text = "0";
    signals::SignalExpr r;
    sim::SimSettings sim;
    bounds::BoundsOptions bounds;

    [[nodiscard]] lti::StateSpace D() const {
        auto asc = [](std::vector<double> v) {
            std::reverse(v.begin(), v.end());
            return lti::Polynomial(std::move(v));
        };
        return lti::ss_of_tf(lti::RationalTF(asc(D_num), asc(D_den)));
    }

    [[nodiscard]] controller::ControllerConfig config() const {
        return controller::make_config(plant, sets, k, gamma_c, D(), Q, projection_eps, initial);
    }
};

namespace detail {

struct Value {
    bool is_list = false;
    double number = 0.0;
    std::vector<Value> items;
};

[[noreturn]] inline void schema_error(int line, const std::string& msg) {
    throw Error(Errc::SchemaError, "line " + std::to_string(line) + ": " + msg);
}

class ValueParser {
public:
    ValueParser(std::string_view text, int line) : s_(text), line_(line) {}

    Value parse() {
        Value v = value();
        skip_ws();
        if (pos_ != s_.size()) schema_error(line_, "unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
        return v;
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    Value value() {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '[') {
            ++pos_;
            Value v;
            v.is_list = true;
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == ']') {
                ++pos_;
                return v;
            }
            for (;;) {
                v.items.push_back(value());
                skip_ws();
                if (pos_ >= s_.size()) schema_error(line_, "unterminated list");
                if (s_[pos_] == ']') {
                    ++pos_;
                    return v;
                }
                if (s_[pos_] != ',') schema_error(line_, "expected ',' or ']' in list");
                ++pos_;
            }
        }
        Value v;
        const char* begin = s_.data() + pos_;
        const char* end = s_.data() + s_.size();
        if (begin != end && *begin == '+') ++begin;
        const auto res = std::from_chars(begin, end, v.number);
        if (res.ec != std::errc{} || !std::isfinite(v.number))
            schema_error(line_, "expected a finite number at '" + std::string(s_.substr(pos_)) + "'");
        pos_ = static_cast<std::size_t>(res.ptr - s_.data());
        return v;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int line_;
};

struct Entry {
    std::string text;
    int line = 0;
};

using Sections = std::map<std::string, std::map<std::string, Entry>>;

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"plant", {"A_m", "b", "c", "x0", "true_omega", "sigma"}},
        {"sets", {"omega", "theta", "delta", "d_theta", "d_sigma"}},
        {"controller", {"k", "gamma_c", "D_num", "D_den", "Q", "projection_eps", "theta_hat0", "sigma_hat0", "omega_hat0"}},
        {"reference", {"r"}},
        {"sim", {"dt", "horizon", "record_stride", "rms_from"}},
        {"bounds", {"c_o_zeros", "omega_grid", "omega_grid_points", "conservative_lambda", "hurwitz_grid_per_dim"}},
    };
    return s;
}

inline bool is_theta_key(const std::string& key) {
    if (key.size() < 6 || key.compare(0, 5, "theta") != 0) return false;
    return std::all_of(key.begin() + 5, key.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline Sections split_sections(std::string_view text) {
    Sections out;
    std::string current;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        const auto raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') schema_error(line_no, "malformed section header");
            current = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!schema().contains(current)) schema_error(line_no, "unknown section [" + current + "]");
            if (out.contains(current)) schema_error(line_no, "duplicate section [" + current + "]");
            out[current];
            continue;
        }
        if (current.empty()) schema_error(line_no, "key outside of any section");
        const auto eq = line.find('=');
        if (eq == std::string::npos) schema_error(line_no, "expected 'key = value'");
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        const bool known = schema().at(current).contains(key) || (current == "plant" && is_theta_key(key));
        if (!known) schema_error(line_no, "unknown key '" + key + "' in [" + current + "]");
        if (value.empty()) schema_error(line_no, "empty value for '" + key + "'");
        auto& sec = out[current];
        if (sec.contains(key)) schema_error(line_no, "duplicate key '" + key + "'");
        sec[key] = Entry{std::move(value), line_no};
    }
    return out;
}

class Reader {
public:
    explicit Reader(const Sections& s) : s_(s) {}

    [[nodiscard]] const Entry* find(const std::string& sec, const std::string& key) const {
        const auto it = s_.find(sec);
        if (it == s_.end()) return nullptr;
        const auto jt = it->second.find(key);
        return jt == it->second.end() ? nullptr : &jt->second;
    }

    [[nodiscard]] const Entry& get(const std::string& sec, const std::string& key) const {
        const Entry* e = find(sec, key);
        if (!e) throw Error(Errc::SchemaError, "missing required key '" + key + "' in [" + sec + "]");
        return *e;
    }

    static Value parse(const Entry& e) { return ValueParser(e.text, e.line).parse(); }

    static double number(const Entry& e) {
        const Value v = parse(e);
        if (v.is_list) schema_error(e.line, "expected a number");
        return v.number;
    }

    static std::vector<double> list(const Entry& e) {
        const Value v = parse(e);
        if (!v.is_list) schema_error(e.line, "expected a list of numbers");
        std::vector<double> out;
        for (const auto& it : v.items) {
            if (it.is_list) schema_error(e.line, "expected a flat list of numbers");
            out.push_back(it.number);
        }
        return out;
    }

    static Vector vector(const Entry& e, std::optional<Eigen::Index> n = std::nullopt) {
        const auto l = list(e);
        if (n && static_cast<Eigen::Index>(l.size()) != *n)
            schema_error(e.line, "expected " + std::to_string(*n) + " entries, got " + std::to_string(l.size()));
        return Eigen::Map<const Vector>(l.data(), static_cast<Eigen::Index>(l.size()));
    }

    static Matrix matrix(const Entry& e) {
        const Value v = parse(e);
        if (!v.is_list || v.items.empty()) schema_error(e.line, "expected a matrix [[...], ...]");
        const auto rows = v.items.size();
        const auto cols = v.items.front().items.size();
        Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < rows; ++i) {
            const auto& row = v.items[i];
            if (!row.is_list || row.items.size() != cols || cols == 0) schema_error(e.line, "ragged or empty matrix row");
            for (std::size_t j = 0; j < cols; ++j) {
                if (row.items[j].is_list) schema_error(e.line, "matrix entries must be numbers");
                M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row.items[j].number;
            }
        }
        return M;
    }

    static plant::Interval interval(const Entry& e) {
        const auto l = list(e);
        if (l.size() != 2) schema_error(e.line, "expected an interval [lo, hi]");
        if (l[0] > l[1]) schema_error(e.line, "interval lower end exceeds upper end");
        return {l[0], l[1]};
    }

    static bool boolean(const Entry& e) {
        if (e.text == "true") return true;
        if (e.text == "false") return false;
        schema_error(e.line, "expected true or false");
    }

    static signals::SignalSpec expression(const Entry& e, const std::string& key, std::size_t n_states) {
        try {
            return signals::SignalSpec{signals::parse(e.text, n_states), e.text, std::nullopt, std::nullopt};
        } catch (const Error& err) {
            std::string msg = "line " + std::to_string(e.line) + ": " + key + ": " + err.what();
            if (err.offset()) {
                msg += " (byte offset " + std::to_string(*err.offset()) + ")";
                throw Error(err.code(), msg, *err.offset());
            }
            throw Error(err.code(), msg);
        }
    }

private:
    const Sections& s_;
};

inline std::string fmt(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline std::string fmt_list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + "]";
}

inline std::string fmt_vec(const Vector& v) { return fmt_list(std::vector<double>(v.data(), v.data() + v.size())); }

inline std::string fmt_mat(const Matrix& M) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < M.rows(); ++i) s += (i ? ", " : "") + fmt_vec(M.row(i).transpose());
    return s + "]";
}

} // namespace detail

/// Parses and validates a scenario document.
inline Scenario parse_scenario(std::string_view text) {
    using detail::Reader;
    const auto sections = detail::split_sections(text);
    const Reader rd(sections);
    Scenario sc;

    auto& p = sc.plant;
    p.A_m = Reader::matrix(rd.get("plant", "A_m"));
    const auto n = p.A_m.rows();
    if (p.A_m.cols() != n) throw Error(Errc::SchemaError, "A_m must be square");
    p.b = Reader::vector(rd.get("plant", "b"), n);
    p.c = Reader::vector(rd.get("plant", "c"), n);
    p.x0 = rd.find("plant", "x0") ? Reader::vector(*rd.find("plant", "x0"), n) : Vector::Zero(n);
    p.omega = Reader::number(rd.get("plant", "true_omega"));
    const auto nn = static_cast<std::size_t>(n);
    for (std::size_t i = 1; i <= nn; ++i) {
        const std::string key = "theta" + std::to_string(i);
        p.theta.push_back(Reader::expression(rd.get("plant", key), key, nn));
    }
    if (const auto it = sections.find("plant"); it != sections.end())
        for (const auto& [key, e] : it->second)
            if (detail::is_theta_key(key) && std::stoul(key.substr(5)) > nn)
                detail::schema_error(e.line, "'" + key + "' exceeds the state dimension");
    p.sigma = Reader::expression(rd.get("plant", "sigma"), "sigma", nn);

    auto& s = sc.sets;
    s.omega = Reader::interval(rd.get("sets", "omega"));
    const Matrix box = Reader::matrix(rd.get("sets", "theta"));
    if (box.rows() != n || box.cols() != 2) throw Error(Errc::SchemaError, "sets.theta must be an n x 2 list of intervals");
    for (Eigen::Index i = 0; i < n; ++i) s.theta_box.push_back({box(i, 0), box(i, 1)});
    s.delta = Reader::number(rd.get("sets", "delta"));
    s.d_theta = Reader::number(rd.get("sets", "d_theta"));
    s.d_sigma = Reader::number(rd.get("sets", "d_sigma"));
    p.sigma.declared_bound = s.delta;
    p.sigma.declared_rate_bound = s.d_sigma;

    sc.k = Reader::number(rd.get("controller", "k"));
    sc.gamma_c = Reader::number(rd.get("controller", "gamma_c"));
    if (const auto* e = rd.find("controller", "D_num")) sc.D_num = Reader::list(*e);
    if (const auto* e = rd.find("controller", "D_den")) sc.D_den = Reader::list(*e);
    sc.Q = rd.find("controller", "Q") ? Reader::matrix(*rd.find("controller", "Q")) : Matrix(Matrix::Identity(n, n));
    if (sc.Q.rows() != n || sc.Q.cols() != n) throw Error(Errc::SchemaError, "Q must be n x n");
    if (const auto* e = rd.find("controller", "projection_eps")) sc.projection_eps = Reader::number(*e);
    if (const auto* e = rd.find("controller", "theta_hat0")) sc.initial.theta = Reader::vector(*e, n);
    if (const auto* e = rd.find("controller", "sigma_hat0")) sc.initial.sigma = Reader::number(*e);
    if (const auto* e = rd.find("controller", "omega_hat0")) sc.initial.omega = Reader::number(*e);

    sc.r_text = rd.get("reference", "r").text;
    sc.r = Reader::expression(rd.get("reference", "r"), "r", 0).expr;

    sc.sim.dt = Reader::number(rd.get("sim", "dt"));
    sc.sim.horizon = Reader::number(rd.get("sim", "horizon"));
    if (const auto* e = rd.find("sim", "record_stride")) {
        const double v = Reader::number(*e);
        if (v < 1 || v != std::floor(v)) detail::schema_error(e->line, "record_stride must be a positive integer");
        sc.sim.record_stride = static_cast<int>(v);
    }
    if (const auto* e = rd.find("sim", "rms_from")) sc.sim.rms_from = Reader::number(*e);
    (void)sc.sim.steps();

    if (const auto* e = rd.find("bounds", "c_o_zeros")) sc.bounds.c_o_zeros = Reader::list(*e);
    if (const auto* e = rd.find("bounds", "omega_grid")) sc.bounds.omega_grid_range = Reader::interval(*e);
    if (const auto* e = rd.find("bounds", "omega_grid_points")) {
        const double v = Reader::number(*e);
        if (v < 1 || v != std::floor(v)) detail::schema_error(e->line, "omega_grid_points must be a positive integer");
        sc.bounds.omega_grid_points = static_cast<int>(v);
    }
    if (const auto* e = rd.find("bounds", "conservative_lambda")) sc.bounds.conservative_lambda = Reader::boolean(*e);
    if (const auto* e = rd.find("bounds", "hurwitz_grid_per_dim")) {
        const double v = Reader::number(*e);
        if (v < 2 || v != std::floor(v)) detail::schema_error(e->line, "hurwitz_grid_per_dim must be an integer >= 2");
        sc.bounds.hurwitz_grid_per_dim = static_cast<int>(v);
    }

    plant::validate_structure(sc.plant, sc.sets);
    (void)sc.config();
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::SchemaError, "cannot open scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

/// Writes a scenario back in the same format; parse_scenario(serialize(s)) reproduces s.
inline std::string serialize(const Scenario& sc) {
    using detail::fmt;
    std::ostringstream o;
    const auto& p = sc.plant;
    o << "[plant]\n";
    o << "A_m = " << detail::fmt_mat(p.A_m) << "\n";
    o << "b = " << detail::fmt_vec(p.b) << "\n";
    o << "c = " << detail::fmt_vec(p.c) << "\n";
    o << "x0 = " << detail::fmt_vec(p.x0) << "\n";
    o << "true_omega = " << fmt(p.omega) << "\n";
    for (std::size_t i = 0; i < p.theta.size(); ++i) o << "theta" << i + 1 << " = " << p.theta[i].text << "\n";
    o << "sigma = " << p.sigma.text << "\n\n";
    const auto& s = sc.sets;
    o << "[sets]\n";
    o << "omega = [" << fmt(s.omega.lo) << ", " << fmt(s.omega.hi) << "]\n";
    o << "theta = [";
    for (std::size_t i = 0; i < s.theta_box.size(); ++i)
        o << (i ? ", " : "") << "[" << fmt(s.theta_box[i].lo) << ", " << fmt(s.theta_box[i].hi) << "]";
    o << "]\n";
    o << "delta = " << fmt(s.delta) << "\nd_theta = " << fmt(s.d_theta) << "\nd_sigma = " << fmt(s.d_sigma) << "\n\n";
    o << "[controller]\n";
    o << "k = " << fmt(sc.k) << "\ngamma_c = " << fmt(sc.gamma_c) << "\n";
    o << "D_num = " << detail::fmt_list(sc.D_num) << "\nD_den = " << detail::fmt_list(sc.D_den) << "\n";
    o << "Q = " << detail::fmt_mat(sc.Q) << "\nprojection_eps = " << fmt(sc.projection_eps) << "\n";
    if (sc.initial.theta) o << "theta_hat0 = " << detail::fmt_vec(*sc.initial.theta) << "\n";
    if (sc.initial.sigma) o << "sigma_hat0 = " << fmt(*sc.initial.sigma) << "\n";
    if (sc.initial.omega) o << "omega_hat0 = " << fmt(*sc.initial.omega) << "\n";
    o << "\n[reference]\nr = " << sc.r_text << "\n\n";
    o << "[sim]\ndt = " << fmt(sc.sim.dt) << "\nhorizon = " << fmt(sc.sim.horizon)
      << "\nrecord_stride = " << sc.sim.record_stride << "\nrms_from = " << fmt(sc.sim.rms_from) << "\n\n";
    o << "[bounds]\n";
    if (!sc.bounds.c_o_zeros.empty()) o << "c_o_zeros = " << detail::fmt_list(sc.bounds.c_o_zeros) << "\n";
    if (sc.bounds.omega_grid_range)
        o << "omega_grid = [" << fmt(sc.bounds.omega_grid_range->lo) << ", " << fmt(sc.bounds.omega_grid_range->hi) << "]\n";
    o << "omega_grid_points = " << sc.bounds.omega_grid_points << "\n";
    o << "conservative_lambda = " << (sc.bounds.conservative_lambda ? "true" : "false") << "\n";
    o << "hurwitz_grid_per_dim = " << sc.bounds.hurwitz_grid_per_dim << "\n";
    return o.str();
}

inline bounds::Certificate certify(const Scenario& sc, const controller::ControllerConfig& cfg) {
    return bounds::compute_performance_bounds({sc.plant, cfg, sc.bounds});
}

// ============================================================================
// Parallel map
// ============================================================================

/// Worker count: hardware concurrency, capped by L1ADAPT_THREADS and by the job count.
inline unsigned worker_count(std::size_t jobs) {
    unsigned n = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("L1ADAPT_THREADS")) {
        unsigned cap = 0;
        const std::string_view sv(env);
        const auto res = std::from_chars(sv.data(), sv.data() + sv.size(), cap);
        if (res.ec == std::errc{} && cap >= 1) n = std::min(n, cap);
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Runs job(i) for i in [0, count) on independent threads; rethrows the first failure.
template <typename Job>
void parallel_for(std::size_t count, Job&& job) {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned workers = worker_count(count);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ============================================================================
// Commands
// ============================================================================

namespace detail {

inline int report_load_error(const Error& e, std::ostream& err) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitSchema;
}

inline std::optional<Scenario> load_or_report(const std::string& path, std::ostream& err, int& code) {
    try {
        return load_scenario(path);
    } catch (const Error& e) {
        code = report_load_error(e, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        code = kExitSchema;
    }
    return std::nullopt;
}

inline bool open_out(const std::string& path, std::ofstream& f, std::ostream& err) {
    f.open(path, std::ios::binary | std::ios::trunc);
    if (!f) err << "error: cannot write '" << path << "'\n";
    return static_cast<bool>(f);
}

} // namespace detail

/// Prints the certificate; exit 0 iff it passes.
inline int cmd_certify(const std::string& path, std::ostream& out, std::ostream& err) {
    int code = kExitOk;
    const auto sc = detail::load_or_report(path, err, code);
    if (!sc) return code;
    const auto cfg = sc->config();
    const auto cert = certify(*sc, cfg);
    out << bounds::to_report(cert);
    const auto sampled = plant::check_sampled_bounds(sc->plant, sc->sets, sc->sim.horizon, 2000);
    out << "sampled_theta_in_box: " << (sampled.theta_in_box ? "true" : "false") << "\n";
    out << "sampled_theta_rate_ok: " << (sampled.theta_rate_ok ? "true" : "false") << "\n";
    out << "sampled_sigma_ok_along_zero_state: " << (sampled.sigma_ok ? "true" : "false") << "\n";
    return cert.pass() ? kExitOk : kExitFailed;
}

struct SimulateOptions {
    bool with_reference = false;
    bool unsafe = false;
    std::optional<std::string> out_path;
};

/// Runs the scenario, writes the trace and prints metrics with a PASS/FAIL line per applicable bound.
inline int cmd_simulate(const std::string& path, const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
    int code = kExitOk;
    const auto sc = detail::load_or_report(path, err, code);
    if (!sc) return code;
    const auto cfg = sc->config();
    const auto cert = certify(*sc, cfg);
    if (!cert.pass() && !opt.unsafe) {
        out << bounds::to_report(cert);
        err << "error: certificate fails; use --unsafe to simulate anyway\n";
        return kExitFailed;
    }
    sim::RunOptions ro;
    ro.with_reference = opt.with_reference;
    ro.unsafe = opt.unsafe;
    ro.certificate_pass = cert.pass();
    const auto res = sim::run_scenario(sc->plant, cfg, sc->r, sc->sim, ro);
    for (const auto& w : res.warnings) err << "warning: " << w << "\n";
    if (opt.out_path) {
        std::ofstream f;
        if (!detail::open_out(*opt.out_path, f, err)) return kExitFailed;
        sim::write_csv(f, res.trace);
    }
    if (!res.ok()) {
        err << "error: " << sim::to_string(res.outcome) << ": " << res.message << "\n";
        return kExitDiverged;
    }
    const auto& m = res.metrics;
    using detail::fmt;
    out << "sup_xtilde: " << fmt(m.sup_xtilde) << "\n";
    out << "terminal_xtilde: " << fmt(m.terminal_xtilde) << "\n";
    out << "tracking_rms: " << fmt(m.tracking_rms) << "\n";
    if (m.sup_e) out << "sup_e: " << fmt(*m.sup_e) << "\n";
    if (m.sup_u_err) out << "sup_u_err: " << fmt(*m.sup_u_err) << "\n";

    bool all_pass = true;
    auto check = [&](const std::string& name, std::optional<double> measured, std::optional<double> bound) {
        if (!cert.pass() || !measured || !bound) {
            out << name << ": N/A\n";
            return;
        }
        const bool ok = *measured <= *bound;
        all_pass = all_pass && ok;
        out << name << ": " << (ok ? "PASS" : "FAIL") << " (" << fmt(*measured) << " <= " << fmt(*bound) << ")\n";
    };
    check("xtilde_bound", m.sup_xtilde, cert.xtilde_bound + 1e-3);
    check("gamma1_bound", m.sup_e, cert.gamma1);
    check("gamma2_bound", m.sup_u_err, cert.gamma2);
    if (cert.hurwitz_sweep_pass) {
        check("gamma3_bound", m.sup_e, cert.gamma3);
        check("gamma4_bound", m.sup_u_err, cert.gamma4);
    }
    return all_pass ? kExitOk : kExitFailed;
}

struct WkRange {
    double lo = 5.0;
    double hi = 100.0;
    int steps = 96;
};

/// Parses "lo:hi:steps".
inline WkRange parse_wk_range(std::string_view s) {
    WkRange r;
    const auto a = s.find(':');
    const auto b = a == std::string_view::npos ? a : s.find(':', a + 1);
    if (b == std::string_view::npos) throw Error(Errc::InvalidArgument, "range must be lo:hi:steps");
    auto num = [&](std::string_view part, auto& v) {
        const auto res = std::from_chars(part.data(), part.data() + part.size(), v);
        if (res.ec != std::errc{} || res.ptr != part.data() + part.size())
            throw Error(Errc::InvalidArgument, "bad number '" + std::string(part) + "' in range");
    };
    num(s.substr(0, a), r.lo);
    num(s.substr(a + 1, b - a - 1), r.hi);
    num(s.substr(b + 1), r.steps);
    if (!(r.lo > 0.0) || !(r.hi >= r.lo) || r.steps < 1) throw Error(Errc::InvalidArgument, "need 0 < lo <= hi and steps >= 1");
    return r;
}

struct Fig2Point {
    double wk = 0.0;
    double value = 0.0;
};

/// ||G||_L1 * L against omega*k (C depends on the product only).
inline std::vector<Fig2Point> l1_curve(const Scenario& sc, const WkRange& range, double rel_tol = l1norm::kDefaultRelTol) {
    const auto grid = bounds::uniform_grid({range.lo, range.hi}, range.steps);
    const auto D = sc.D();
    std::vector<Fig2Point> pts(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        const auto req = bounds::check_l1_requirement(sc.plant.A_m, sc.plant.b, D, grid[i], sc.sets, rel_tol, {1.0});
        pts[i] = {grid[i], req.value};
    });
    return pts;
}

inline int cmd_fig2(const std::string& path, const WkRange& range, const std::optional<std::string>& out_path,
                    std::ostream& out, std::ostream& err) {
    int code = kExitOk;
    const auto sc = detail::load_or_report(path, err, code);
    if (!sc) return code;
    const auto pts = l1_curve(*sc, range);
    std::ofstream f;
    if (out_path && !detail::open_out(*out_path, f, err)) return kExitFailed;
    std::ostream& csv = out_path ? static_cast<std::ostream&>(f) : out;
    csv << "wk,l1_gain_times_L\n";
    for (const auto& p : pts) csv << detail::fmt(p.wk) << ',' << detail::fmt(p.value) << '\n';
    const auto it = std::find_if(pts.begin(), pts.end(), [](const Fig2Point& p) { return p.value < 1.0; });
    if (it == pts.end())
        out << "crossing: none in range\n";
    else
        out << "crossing: wk = " << detail::fmt(it->wk) << " (value " << detail::fmt(it->value) << ")\n";
    return kExitOk;
}

struct SweepRow {
    double gamma_c = 0.0;
    double dt = 0.0;
    double sup_xtilde = 0.0;
    double sup_e = 0.0;
    double sup_u_err = 0.0;
    std::optional<double> gamma1, gamma2;
};

/// dt halved until dt * gamma_c <= 0.5.
inline double stiff_dt(double dt, double gamma_c) {
    while (dt * gamma_c > sim::kStiffnessLimit) dt /= 2.0;
    return dt;
}

/// Runs the scenario with reference co-simulation for each gamma_c. The gamma bounds scale exactly
/// as 1/sqrt(gamma_c), so the certificate is computed once.
inline std::vector<SweepRow> sweep_gamma(const Scenario& sc, const std::vector<double>& gammas) {
    const auto base_cfg = sc.config();
    const auto cert = certify(sc, base_cfg);
    std::vector<SweepRow> rows(gammas.size());
    parallel_for(gammas.size(), [&](std::size_t i) {
        auto cfg = base_cfg;
        cfg.gamma_c = gammas[i];
        auto settings = sc.sim;
        settings.dt = stiff_dt(settings.dt, gammas[i]);
        sim::RunOptions ro;
        ro.with_reference = true;
        ro.certificate_pass = cert.pass();
        const auto res = sim::run_scenario(sc.plant, cfg, sc.r, settings, ro);
        res.throw_if_failed();
        SweepRow& row = rows[i];
        row.gamma_c = gammas[i];
        row.dt = settings.dt;
        row.sup_xtilde = res.metrics.sup_xtilde;
        row.sup_e = res.metrics.sup_e.value_or(0.0);
        row.sup_u_err = res.metrics.sup_u_err.value_or(0.0);
        const double scale = std::sqrt(base_cfg.gamma_c / gammas[i]);
        if (cert.gamma1) row.gamma1 = *cert.gamma1 * scale;
        if (cert.gamma2) row.gamma2 = *cert.gamma2 * scale;
    });
    return rows;
}

inline bool strictly_decreasing_sup_e(const std::vector<SweepRow>& rows) {
    auto sorted = rows;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.gamma_c < b.gamma_c; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (!(sorted[i].sup_e < sorted[i - 1].sup_e)) return false;
    return true;
}

inline int cmd_sweep_gamma(const std::string& path, const std::vector<double>& gammas,
                           const std::optional<std::string>& out_path, std::ostream& out, std::ostream& err) {
    int code = kExitOk;
    const auto sc = detail::load_or_report(path, err, code);
    if (!sc) return code;
    for (double g : gammas)
        if (!(g > 0.0)) {
            err << "error: gamma values must be positive\n";
            return kExitSchema;
        }
    std::vector<SweepRow> rows;
    try {
        rows = sweep_gamma(*sc, gammas);
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return e.code() == Errc::Diverged || e.code() == Errc::NonFinite ? kExitDiverged : kExitFailed;
    }
    std::ofstream f;
    if (out_path && !detail::open_out(*out_path, f, err)) return kExitFailed;
    std::ostream& csv = out_path ? static_cast<std::ostream&>(f) : out;
    using detail::fmt;
    csv << "gamma_c,sup_xtilde,sup_e,sup_u_err,gamma1,gamma2\n";
    for (const auto& r : rows)
        csv << fmt(r.gamma_c) << ',' << fmt(r.sup_xtilde) << ',' << fmt(r.sup_e) << ',' << fmt(r.sup_u_err) << ','
            << (r.gamma1 ? fmt(*r.gamma1) : "nan") << ',' << (r.gamma2 ? fmt(*r.gamma2) : "nan") << '\n';
    const bool dec = strictly_decreasing_sup_e(rows);
    out << "sup_e strictly decreasing: " << (dec ? "yes" : "no") << "\n";
    return dec ? kExitOk : kExitFailed;
}

} // namespace l1adapt::cli
