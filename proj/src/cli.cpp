#include "iga/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "iga/benchmarks.hpp"
#include "iga/dual_basis.hpp"
#include "iga/dynamics.hpp"
#include "iga/errors.hpp"
#include "iga/quadrature.hpp"

namespace iga {

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::spectrum: return "spectrum";
        case Experiment::annulus: return "annulus";
        case Experiment::project: return "project";
        case Experiment::stability: return "stability";
    }
    return "unknown";
}

Experiment parse_experiment(std::string_view name) {
    for (auto e : {Experiment::spectrum, Experiment::annulus, Experiment::project, Experiment::stability})
        if (name == to_string(e)) return e;
    throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::string to_string(InitialProjection p) {
    switch (p) {
        case InitialProjection::quasi: return "quasi";
        case InitialProjection::l2: return "l2";
        case InitialProjection::own_mass: return "own_mass";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// KeyValueConfig

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool valid_key(std::string_view key) {
    if (key.empty()) return false;
    return std::all_of(key.begin(), key.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
    KeyValueConfig cfg;
    std::string line;
    for (int number = 1; std::getline(in, line); ++number) {
        const std::string origin = source + ":" + std::to_string(number);
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(origin + ": expected 'key = value', got '" + body + "'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (!valid_key(key)) throw ConfigError(origin + ": invalid key '" + key + "' (use [a-z0-9_])");
        if (value.empty()) throw ConfigError(origin + ": empty value for '" + key + "'");
        if (const auto* prev = cfg.find(key))
            throw ConfigError(origin + ": duplicate key '" + key + "' (first set at " + prev->origin + ")");
        cfg.entries_[key] = {value, origin};
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open configuration file");
    return parse(in, path.string());
}

void KeyValueConfig::set(const std::string& key, std::string value, std::string origin) {
    if (!valid_key(key)) throw ConfigError(origin + ": invalid key '" + key + "' (use [a-z0-9_])");
    entries_[key] = {std::move(value), std::move(origin)};
}

const KeyValueConfig::Entry* KeyValueConfig::find(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// RunConfig

namespace {

[[noreturn]] void fail(const std::string& key, const KeyValueConfig::Entry& e, const std::string& message) {
    throw ConfigError(e.origin + ": " + key + ": " + message);
}

long long parse_integer(const std::string& key, const KeyValueConfig::Entry& e, std::string_view text) {
    long long v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) fail(key, e, "expected an integer, got '" + std::string(text) + "'");
    return v;
}

double parse_real(const std::string& key, const KeyValueConfig::Entry& e) {
    double v = 0.0;
    const auto& t = e.value;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
        fail(key, e, "expected a finite number, got '" + t + "'");
    return v;
}

bool parse_bool(const std::string& key, const KeyValueConfig::Entry& e) {
    const auto& v = e.value;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(key, e, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& key, const KeyValueConfig::Entry& e) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (true) {
        const auto comma = e.value.find(',', start);
        const std::string item = trim(std::string_view(e.value).substr(start, comma - start));
        if (item.empty()) fail(key, e, "empty list element in '" + e.value + "'");
        items.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return items;
}

std::size_t parse_count(const std::string& key, const KeyValueConfig::Entry& e, std::string_view text) {
    const long long v = parse_integer(key, e, text);
    if (v <= 0) fail(key, e, "must be positive, got " + std::string(text));
    return static_cast<std::size_t>(v);
}

}  // namespace

RunConfig default_run_config(Experiment e) {
    RunConfig c;
    c.experiment = e;
    c.meshes = e == Experiment::project ? std::vector<std::size_t>{10, 20, 40} : std::vector<std::size_t>{8, 16, 32};
    c.mass_kinds = {MassKind::galerkin_consistent, MassKind::customized, MassKind::rowsum_lumped};
    return c;
}

RunConfig make_run_config(Experiment experiment, const KeyValueConfig& config) {
    RunConfig c = default_run_config(experiment);
    for (const auto& [key, e] : config.entries()) {
        if (key == "experiment") {
            if (e.value != to_string(experiment))
                fail(key, e, "file is for '" + e.value + "' but '" + to_string(experiment) + "' was requested");
        } else if (key == "degree") {
            const long long p = parse_integer(key, e, e.value);
            if (p < 2 || p > 5) fail(key, e, "must be one of 2, 3, 4, 5, got " + e.value);
            c.degree = static_cast<int>(p);
        } else if (key == "dofs") {
            c.dofs = parse_count(key, e, e.value);
        } else if (key == "meshes") {
            c.meshes.clear();
            for (const auto& item : split_list(key, e)) c.meshes.push_back(parse_count(key, e, item));
        } else if (key == "mass_kinds") {
            c.mass_kinds.clear();
            for (const auto& item : split_list(key, e)) {
                try {
                    c.mass_kinds.push_back(parse_mass_kind(item));
                } catch (const std::invalid_argument&) {
                    fail(key, e, "unknown mass kind '" + item + "'");
                }
            }
        } else if (key == "outlier_removal") {
            c.outlier_removal = parse_bool(key, e);
        } else if (key == "rk_scheme" || key == "lumped_scheme") {
            const bool auto_ok = key == "rk_scheme" && e.value == "auto";
            if (!auto_ok && !is_scheme_name(e.value)) fail(key, e, "unknown scheme '" + e.value + "'");
            if (e.value == "euler") fail(key, e, "euler has no stable segment of the imaginary axis");
            (key == "rk_scheme" ? c.rk_scheme : c.lumped_scheme) = e.value;
        } else if (key == "dt_fraction") {
            c.dt_fraction = parse_real(key, e);
            if (!(c.dt_fraction > 0.0 && c.dt_fraction <= 1.0)) fail(key, e, "must lie in (0, 1], got " + e.value);
        } else if (key == "initial_projection") {
            if (e.value == "quasi") c.initial_projection = InitialProjection::quasi;
            else if (e.value == "l2") c.initial_projection = InitialProjection::l2;
            else if (e.value == "own_mass") c.initial_projection = InitialProjection::own_mass;
            else fail(key, e, "expected quasi, l2 or own_mass, got '" + e.value + "'");
        } else if (key == "dimension") {
            const long long d = parse_integer(key, e, e.value);
            if (d != 1 && d != 2) fail(key, e, "must be 1 or 2, got " + e.value);
            c.dimension = static_cast<int>(d);
        } else if (key == "elements") {
            c.elements = parse_count(key, e, e.value);
        } else if (key == "periods") {
            c.periods = parse_count(key, e, e.value);
        } else if (key == "threads") {
            c.threads = static_cast<unsigned>(parse_count(key, e, e.value));
        } else if (key == "power_tolerance") {
            c.power_tolerance = parse_real(key, e);
            if (!(c.power_tolerance > 0.0 && c.power_tolerance < 1e-2))
                fail(key, e, "must lie in (0, 1e-2), got " + e.value);
        } else if (key == "output_dir") {
            c.output_dir = e.value;
        } else {
            fail(key, e, "unknown key");
        }
    }
    const auto check = [&](bool ok, const std::string& key, const std::string& message) {
        if (ok) return;
        if (const auto* e = config.find(key)) fail(key, *e, message);
        throw ConfigError(key + ": " + message);
    };
    if (experiment == Experiment::spectrum || (experiment == Experiment::stability && c.dimension == 1))
        check(c.dofs >= static_cast<std::size_t>(c.degree) + 3 && c.dofs <= 2000, "dofs",
              "must lie in [p + 3, 2000] for degree " + std::to_string(c.degree));
    if (experiment == Experiment::project)
        for (auto n : c.meshes)
            check(n >= static_cast<std::size_t>(c.degree) + 1, "meshes",
                  "every dimension must be at least p + 1 = " + std::to_string(c.degree + 1));
    check(!c.mass_kinds.empty(), "mass_kinds", "at least one mass kind is required");
    return c;
}

std::string scheme_for(const RunConfig& config, MassKind kind) {
    if (kind == MassKind::rowsum_lumped) return config.lumped_scheme;
    if (config.rk_scheme != "auto") return config.rk_scheme;
    return tableau_for_degree(config.degree).name;
}

// ---------------------------------------------------------------------------
// CSV

void CsvTable::add_metadata(std::string key, std::string value) { metadata.emplace_back(std::move(key), std::move(value)); }

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw std::out_of_range("CsvTable: no column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::numbers(std::string_view name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        const auto& t = r.at(c);
        double v = std::numeric_limits<double>::quiet_NaN();
        if (!t.empty()) std::from_chars(t.data(), t.data() + t.size(), v);
        out.push_back(v);
    }
    return out;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i > 0) out << ',';
        out << csv_field(row[i]);
    }
    out << '\n';
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
    for (const auto& [k, v] : table.metadata) out << "# " << k << '=' << v << '\n';
    write_row(out, table.header);
    for (const auto& r : table.rows) {
        if (r.size() != table.header.size()) throw std::logic_error("write_csv: row width differs from header");
        write_row(out, r);
    }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_csv(out, table);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw std::logic_error("format_number: conversion failed");
    return std::string(buf, ptr);
}

namespace {

template <class T>
std::string join(const std::vector<T>& items, auto&& to_text) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ',';
        out += to_text(items[i]);
    }
    return out;
}

std::string yes_no(bool b) { return b ? "true" : "false"; }

}  // namespace

void add_config_metadata(CsvTable& t, const RunConfig& c) {
    t.add_metadata("experiment", to_string(c.experiment));
    t.add_metadata("degree", std::to_string(c.degree));
    t.add_metadata("dofs", std::to_string(c.dofs));
    t.add_metadata("meshes", join(c.meshes, [](std::size_t n) { return std::to_string(n); }));
    t.add_metadata("mass_kinds", join(c.mass_kinds, [](MassKind k) { return to_string(k); }));
    t.add_metadata("outlier_removal", yes_no(c.outlier_removal));
    t.add_metadata("rk_scheme", c.rk_scheme);
    t.add_metadata("lumped_scheme", c.lumped_scheme);
    t.add_metadata("dt_fraction", format_number(c.dt_fraction));
    t.add_metadata("initial_projection", to_string(c.initial_projection));
    t.add_metadata("dimension", std::to_string(c.dimension));
    t.add_metadata("elements", std::to_string(c.elements));
    t.add_metadata("periods", std::to_string(c.periods));
    t.add_metadata("threads", std::to_string(c.threads));
    t.add_metadata("power_tolerance", format_number(c.power_tolerance));
    t.add_metadata("quadrature_points_per_element", std::to_string(c.degree + 2));
    t.add_metadata("dual_half_bandwidth", std::to_string(c.degree));
    t.add_metadata("outlier_constraints_per_end", std::to_string(outlier_constraint_count(c.degree)));
}

// ---------------------------------------------------------------------------
// Shared pieces of the experiments

namespace {

std::string scheme_description(const std::string& name) {
    if (name == "central_difference") return "central_difference (velocity form, 1 acceleration per step)";
    const auto t = tableau_by_name(name);
    std::string d = name + " (" + std::to_string(t.stages()) + " stages, order " + std::to_string(t.order);
    if (name == "rk6") d += ", extrapolated Gragg midpoint with step counts 2 4 6 8";
    return d + ")";
}

/// Inverse mass of a system as a linear map, restricted to C x = 0 when
/// outlier constraints are present.
struct Dynamics {
    std::unique_ptr<DiscreteSystem> system;
    std::unique_ptr<SemiDiscreteOperator> op;
    std::optional<ConstraintProjection> projection;
    DenseMatrix constraints;

    [[nodiscard]] std::size_t size() const { return op->size(); }
    [[nodiscard]] std::size_t retained() const { return size() - constraints.rows(); }

    void inverse_mass(std::span<const double> r, std::span<double> out) const {
        if (projection) projection->apply(r, out);
        else op->mass().solve(r, out);
    }
    /// out = X K d.
    void operator_apply(std::span<const double> d, std::span<double> out) const {
        std::vector<double> kd(size());
        op->stiffness(d, kd);
        inverse_mass(kd, out);
    }
    /// out = -X K d (free vibration).
    void acceleration(std::span<const double> d, std::span<double> out) const {
        operator_apply(d, out);
        for (double& v : out) v = -v;
    }
    [[nodiscard]] double omega_max(double tolerance) const {
        PowerIterationOptions o;
        o.tolerance = tolerance;
        return max_frequency([this](auto x, auto y) { operator_apply(x, y); }, size(), o);
    }
};

Dynamics make_dynamics(std::unique_ptr<DiscreteSystem> sys, bool outlier_removal, unsigned threads) {
    Dynamics d;
    d.system = std::move(sys);
    d.system->set_threads(threads);
    d.op = std::make_unique<SemiDiscreteOperator>(*d.system);
    if (outlier_removal) {
        const auto r = d.system->free_range(0);
        const auto c1 = outlier_constraints(d.system->space(0), r[0], r[1]);
        if (c1.rows() > 0) {
            d.constraints = lift_constraints(c1, d.system->free_size(1));
            const auto* op = d.op.get();
            d.projection.emplace([op](auto x, auto y) { op->mass().solve(x, y); }, d.constraints);
        }
    }
    return d;
}

std::unique_ptr<DiscreteSystem> annulus_system(std::size_t radial, int p, MassKind kind) {
    const auto ms = annulus_solution();
    return std::make_unique<DiscreteSystem>(uniform_space(radial, p),
                                            uniform_space(2 * radial, p, BoundaryKind::periodic),
                                            annulus_map(ms.a, ms.b), kind, DirichletSides{true, true, false, false},
                                            ms.kappa);
}

std::unique_ptr<DiscreteSystem> string_system(std::size_t dofs, int p, MassKind kind) {
    return std::make_unique<DiscreteSystem>(make_string_system(dofs - static_cast<std::size_t>(p), p, kind));
}

void add_annulus_metadata(CsvTable& t, std::size_t periods) {
    const auto ms = annulus_solution();
    t.add_metadata("domain", "annulus a <= r <= b, analytic polar map, radial clamped x periodic angular space");
    t.add_metadata("radius_inner", format_number(ms.a));
    t.add_metadata("radius_outer", format_number(ms.b));
    t.add_metadata("kappa", format_number(ms.kappa));
    t.add_metadata("kappa_rule", "kappa = omega^2 with omega = a, which makes J_4(r) cos(omega t) cos(4 theta) exact");
    t.add_metadata("final_time", format_number(static_cast<double>(periods) * ms.period()));
    t.add_metadata("dirichlet", "r = a and r = b");
}

double l2_error_1d(const SplineSpace& space, std::span<const double> c, const std::function<double(double)>& f) {
    const BasisTable t(space, space.degree() + 3, 0);
    double err2 = 0.0;
    for (std::size_t q = 0; q < t.size(); ++q) {
        double uh = 0.0;
        for (int k = 0; k <= t.degree(); ++k) uh += t.value(q, k) * c[t.index(q, k)];
        const double e = uh - f(t.x(q));
        err2 += t.weight(q) * e * e;
    }
    return std::sqrt(err2);
}

}  // namespace

// ---------------------------------------------------------------------------
// spectrum

CsvTable run_spectrum(const RunConfig& config) {
    const int p = config.degree;
    const MassKind kinds[] = {MassKind::galerkin_consistent, MassKind::customized, MassKind::rowsum_lumped};
    std::vector<std::vector<double>> omegas;
    std::size_t removed = 0;
    for (MassKind kind : kinds) {
        auto sys = string_system(config.dofs, p, kind);
        SemiDiscreteOperator op(*sys);
        const std::size_t n = op.size();
        DenseMatrix k = op.dense_stiffness();
        DenseMatrix m;
        if (kind == MassKind::customized) {
            // The customized mass is defined through its inverse.
            DenseMatrix x(n, n);
            std::vector<double> e(n, 0.0), y(n);
            for (std::size_t j = 0; j < n; ++j) {
                e[j] = 1.0;
                op.mass().solve(e, y);
                for (std::size_t i = 0; i < n; ++i) x(i, j) = y[i];
                e[j] = 0.0;
            }
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < i; ++j) x(i, j) = x(j, i) = 0.5 * (x(i, j) + x(j, i));
            m = spd_inverse(x);
        } else {
            m = op.dense_mass();
        }
        if (config.outlier_removal) {
            const auto r = sys->free_range(0);
            const auto c = outlier_constraints(sys->space(0), r[0], r[1]);
            removed = c.rows();
            if (c.rows() > 0) {
                const auto t = nullspace_basis(c);
                const auto tt = t.transpose();
                k = tt * k * t;
                m = tt * m * t;
            }
        }
        omegas.push_back(eigensolve(k, m, true).frequencies);
    }

    CsvTable table;
    add_config_metadata(table, config);
    table.add_metadata("problem", "string on [0, 1], u_tt = u_xx, u(0) = u(1) = 0");
    table.add_metadata("string_elements", std::to_string(config.dofs - static_cast<std::size_t>(p)));
    table.add_metadata("eigensolver", "dense: Cholesky of K, Jacobi on L^-1 M L^-T, omega = mu^-1/2");
    table.add_metadata("customized_mass", "dense inverse of the constrained dual coefficient matrix");
    table.add_metadata("outlier_constraints_removed", std::to_string(removed));
    table.header = {"mode_index",       "mode_fraction", "omega_exact",    "omega_consistent", "omega_customized",
                    "omega_lumped",     "err_consistent", "err_customized", "err_lumped"};
    const std::size_t count = omegas[0].size();
    for (std::size_t j = 0; j < count; ++j) {
        const double exact = string_frequency(static_cast<int>(j + 1));
        std::vector<std::string> row{std::to_string(j + 1), format_number(static_cast<double>(j + 1) / count),
                                     format_number(exact)};
        for (const auto& w : omegas) row.push_back(format_number(w[j]));
        for (const auto& w : omegas) row.push_back(format_number(std::abs(w[j] / exact - 1.0)));
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// annulus

namespace {

struct Unstable {
    std::size_t step;
};

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<double> initial_coefficients(const RunConfig& config, const Dynamics& dyn, std::size_t radial) {
    const auto ms = annulus_solution();
    const auto& sys = *dyn.system;
    const auto exact0 = [&](double x, double y) { return ms.value_xy(x, y, 0.0); };
    std::vector<double> d0;
    switch (config.initial_projection) {
        case InitialProjection::quasi:
            d0 = sys.restrict_to_free(quasi_project(sys, [&](double x1, double x2) {
                return ms.value(ms.a + (ms.b - ms.a) * x1, 2.0 * std::numbers::pi * x2, 0.0);
            }));
            break;
        case InitialProjection::l2: {
            const auto gal = annulus_system(radial, config.degree, MassKind::galerkin_consistent);
            const SemiDiscreteOperator gop(*gal);
            const auto f = gal->restrict_to_free(load_vector(*gal, exact0));
            d0.assign(f.size(), 0.0);
            gop.mass().solve(f, d0);
            break;
        }
        case InitialProjection::own_mass: {
            const auto f = sys.restrict_to_free(load_vector(sys, exact0));
            d0.assign(f.size(), 0.0);
            dyn.op->mass().solve(f, d0);
            break;
        }
    }
    if (dyn.projection) {
        std::vector<double> out(d0.size());
        dyn.projection->project_state(d0, out);
        d0 = std::move(out);
    }
    return d0;
}

}  // namespace

AnnulusResult run_annulus(const RunConfig& config) {
    const int p = config.degree;
    const auto ms = annulus_solution();
    const double period = static_cast<double>(config.periods) * ms.period();
    const std::vector<std::string> header{"p", "n_elem_radial", "n_elem_angular", "sqrt_dofs",     "mass_kind",
                                          "outlier_removed", "dt",          "steps",          "l2_rel_error",
                                          "wall_seconds",    "status"};
    AnnulusResult result;
    result.summary.header = header;
    result.summary.header.push_back("slope");
    add_config_metadata(result.summary, config);
    add_annulus_metadata(result.summary, config.periods);
    std::set<std::string> schemes;
    for (MassKind kind : config.mass_kinds) schemes.insert(scheme_for(config, kind));
    for (const auto& s : schemes) {
        result.summary.add_metadata("scheme_" + s, scheme_description(s));
        result.summary.add_metadata("cmax_" + s, format_number(default_cmax(s)));
    }
    result.summary.add_metadata("slope_definition", "log(e_coarse / e_fine) / log(n_fine / n_coarse), same mass kind");
    result.summary.add_metadata("instability_threshold", "max |d| > 1e6 max |d0|");

    std::vector<std::pair<std::size_t, double>> previous(config.mass_kinds.size(), {0, 0.0});
    for (std::size_t radial : config.meshes) {
        CsvTable mesh;
        mesh.header = header;
        mesh.metadata = result.summary.metadata;
        mesh.add_metadata("n_elem_radial", std::to_string(radial));
        for (std::size_t ki = 0; ki < config.mass_kinds.size(); ++ki) {
            const MassKind kind = config.mass_kinds[ki];
            const auto start = std::chrono::steady_clock::now();
            const auto dyn = make_dynamics(annulus_system(radial, p, kind), config.outlier_removal, config.threads);
            const std::string scheme = scheme_for(config, kind);
            const double omega = dyn.omega_max(config.power_tolerance);
            const double dt_target = config.dt_fraction * critical_dt(default_cmax(scheme), omega);
            const auto steps = static_cast<std::size_t>(std::ceil(period / dt_target));
            const double dt = period / static_cast<double>(steps);

            DynamicState state{initial_coefficients(config, dyn, radial), std::vector<double>(dyn.size(), 0.0), 0.0};
            const double limit = 1e6 * max_abs(state.d);
            std::string status = "ok";
            double error = std::numeric_limits<double>::quiet_NaN();
            try {
                state = integrate_by_name(
                    scheme, [&](auto d, auto a) { dyn.acceleration(d, a); }, std::move(state), dt, steps,
                    [&](std::size_t k, const DynamicState& s) {
                        if (max_abs(s.d) > limit) throw Unstable{k};
                    });
                error = l2_error(*dyn.system, dyn.system->inject(state.d),
                                 [&](double x, double y) { return ms.value_xy(x, y, period); });
            } catch (const Unstable& u) {
                status = "unstable at step " + std::to_string(u.step);
            } catch (const NumericalError& e) {
                status = std::string("unstable: ") + e.what();
            }
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

            std::vector<std::string> row{std::to_string(p),
                                         std::to_string(radial),
                                         std::to_string(2 * radial),
                                         format_number(std::sqrt(static_cast<double>(dyn.retained()))),
                                         to_string(kind),
                                         yes_no(config.outlier_removal),
                                         format_number(dt),
                                         std::to_string(steps),
                                         status == "ok" ? format_number(error) : "",
                                         format_number(seconds),
                                         status};
            mesh.rows.push_back(row);
            std::string slope;
            auto& [prev_n, prev_err] = previous[ki];
            if (prev_n > 0 && prev_err > 0.0 && status == "ok")
                slope = format_number(std::log(prev_err / error) / std::log(double(radial) / double(prev_n)));
            row.push_back(slope);
            result.summary.rows.push_back(std::move(row));
            previous[ki] = {radial, status == "ok" ? error : 0.0};
        }
        result.per_mesh.push_back(std::move(mesh));
    }
    return result;
}

// ---------------------------------------------------------------------------
// project

CsvTable run_project(const RunConfig& config) {
    const int p = config.degree;
    CsvTable table;
    add_config_metadata(table, config);
    table.add_metadata("domain", "[0, 1], uniform open knot vector, maximal smoothness");
    table.add_metadata("norm", "absolute L2 error by Gauss quadrature with p + 3 points per element");
    table.header = {"function", "p", "N", "constrained", "l2_error"};
    struct Target {
        std::string name;
        std::string constrained;
        std::function<double(double)> f;
    };
    std::vector<Target> targets;
    for (int q = 0; q <= p; ++q)
        targets.push_back({"x^" + std::to_string(q), "none", [q](double x) { return std::pow(x, q); }});
    targets.push_back({"x^" + std::to_string(p), "left", [p](double x) { return std::pow(x, p); }});
    targets.push_back({"(1-x)^" + std::to_string(p), "right", [p](double x) { return std::pow(1.0 - x, p); }});
    targets.push_back({"x^" + std::to_string(p - 1) + "*(1-x)", "both",
                       [p](double x) { return std::pow(x, p - 1) * (1.0 - x); }});
    targets.push_back({"sin(pi*x)", "both", [](double x) { return std::sin(std::numbers::pi * x); }});

    for (std::size_t n : config.meshes) {
        const auto space = uniform_space(n - static_cast<std::size_t>(p), p);
        const auto basis = approximate_dual(space);
        for (const auto& t : targets) {
            std::vector<double> c;
            if (t.constrained == "none") {
                c = quasi_project(basis, t.f);
            } else {
                const bool left = t.constrained != "right", right = t.constrained != "left";
                c = quasi_project(constrain_dual(basis, left, right), t.f);
            }
            table.rows.push_back({t.name, std::to_string(p), std::to_string(n), t.constrained,
                                  format_number(l2_error_1d(space, c, t.f))});
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// stability

CsvTable run_stability(const RunConfig& config) {
    const int p = config.degree;
    const std::string scheme = config.rk_scheme == "auto" ? tableau_for_degree(p).name : config.rk_scheme;
    const double cmax_paper = default_cmax(scheme);
    const double cmax_computed = scheme_stability_limit(scheme);
    CsvTable table;
    add_config_metadata(table, config);
    if (config.dimension == 1) {
        table.add_metadata("problem", "string on [0, 1] with N = dofs");
    } else {
        add_annulus_metadata(table, 1);
        table.add_metadata("n_elem_radial", std::to_string(config.elements));
    }
    table.add_metadata("scheme", scheme_description(scheme));
    table.add_metadata("omega_max", "Chebyshev-accelerated power iteration on M^-1 K");
    table.add_metadata("ratio_reference", "dt_crit of galerkin_consistent without outlier removal");
    table.header = {"p",          "mass_kind",      "outlier_removed", "omega_max", "C_max_paper",
                    "C_max_computed", "dt_crit", "ratio_vs_consistent"};

    const auto build = [&](MassKind kind, bool outliers) {
        auto sys = config.dimension == 1 ? string_system(config.dofs, p, kind)
                                         : annulus_system(config.elements, p, kind);
        return make_dynamics(std::move(sys), outliers, config.threads);
    };
    const double dt_reference =
        critical_dt(cmax_paper, build(MassKind::galerkin_consistent, false).omega_max(config.power_tolerance));
    for (bool outliers : {false, true}) {
        for (MassKind kind : config.mass_kinds) {
            const double omega = build(kind, outliers).omega_max(config.power_tolerance);
            const double dt = critical_dt(cmax_paper, omega);
            table.rows.push_back({std::to_string(p), to_string(kind), yes_no(outliers), format_number(omega),
                                  format_number(cmax_paper), format_number(cmax_computed), format_number(dt),
                                  format_number(dt / dt_reference)});
        }
    }
    return table;
}

// ---------------------------------------------------------------------------

std::vector<std::filesystem::path> run_experiment(const RunConfig& config) {
    std::filesystem::create_directories(config.output_dir);
    const std::string tag = "p" + std::to_string(config.degree);
    std::vector<std::filesystem::path> written;
    const auto emit = [&](const std::string& name, const CsvTable& t) {
        const auto path = config.output_dir / name;
        write_csv(path, t);
        written.push_back(path);
    };
    switch (config.experiment) {
        case Experiment::spectrum: emit("spectrum_" + tag + ".csv", run_spectrum(config)); break;
        case Experiment::project: emit("project_" + tag + ".csv", run_project(config)); break;
        case Experiment::stability:
            emit("stability_" + tag + "_" + std::to_string(config.dimension) + "d.csv", run_stability(config));
            break;
        case Experiment::annulus: {
            const auto r = run_annulus(config);
            for (std::size_t i = 0; i < r.per_mesh.size(); ++i)
                emit("annulus_" + tag + "_e" + std::to_string(config.meshes[i]) + ".csv", r.per_mesh[i]);
            emit("annulus_" + tag + "_summary.csv", r.summary);
            break;
        }
    }
    return written;
}

}  // namespace iga
