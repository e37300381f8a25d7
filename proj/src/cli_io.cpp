#include "quadray/cli_io.hpp"

#include "quadray/core_dynamics.hpp"
#include "quadray/periodic_orbits.hpp"
#include "quadray/precision.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <utility>

#ifndef QUADRAY_VERSION
#define QUADRAY_VERSION "0.0.0"
#endif

namespace quadray {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Caps on user-supplied sizes. Module-level limits (enumeration caps, ray
// periods) are enforced by the modules themselves.
constexpr int kMaxN = 40;
constexpr int kMaxPeriod = 24;
constexpr std::size_t kMaxGridPoints = 10000;
constexpr std::size_t kMaxSamples = 10'000'000;
constexpr std::size_t kMaxJuliaPoints = 10'000'000;
constexpr int kMaxGridSide = 4096;
constexpr int kMaxTerms = 500;

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return parts;
}

double parse_double(std::string_view text, std::string_view what)
{
    text = trim(text);
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
        throw UsageError(fmt::format("{}: expected a finite number, got '{}'", what, text));
    return value;
}

template <class Int>
Int parse_integer(std::string_view text, std::string_view what)
{
    text = trim(text);
    Int value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw UsageError(fmt::format("{}: expected an integer, got '{}'", what, text));
    return value;
}

int parse_int_in(std::string_view text, std::string_view what, int lo, int hi)
{
    const int v = parse_integer<int>(text, what);
    if (v < lo || v > hi)
        throw UsageError(fmt::format("{}: {} is outside [{}, {}]", what, v, lo, hi));
    return v;
}

std::size_t parse_size_in(std::string_view text, std::string_view what, std::size_t lo, std::size_t hi)
{
    const auto v = parse_integer<std::size_t>(text, what);
    if (v < lo || v > hi)
        throw UsageError(fmt::format("{}: {} is outside [{}, {}]", what, v, lo, hi));
    return v;
}

double parse_positive(std::string_view text, std::string_view what)
{
    const double v = parse_double(text, what);
    if (!(v > 0.0))
        throw UsageError(fmt::format("{}: must be positive", what));
    return v;
}

bool parse_bool(std::string_view text, std::string_view what)
{
    text = trim(text);
    if (text == "true" || text == "1" || text == "yes" || text == "on")
        return true;
    if (text == "false" || text == "0" || text == "no" || text == "off")
        return false;
    throw UsageError(fmt::format("{}: expected true or false, got '{}'", what, text));
}

std::string one_of(std::string_view text, std::string_view what, std::initializer_list<std::string_view> allowed)
{
    text = trim(text);
    for (auto a : allowed)
        if (a == text)
            return std::string(text);
    std::string list;
    for (auto a : allowed)
        list += (list.empty() ? "" : ", ") + std::string(a);
    throw UsageError(fmt::format("{}: '{}' is not one of {}", what, text, list));
}

Viewport parse_viewport(std::string_view text)
{
    const auto parts = split(text, ',');
    if (parts.size() != 4)
        throw UsageError("viewport: expected xmin,xmax,ymin,ymax");
    Viewport v{parse_double(parts[0], "viewport"), parse_double(parts[1], "viewport"),
               parse_double(parts[2], "viewport"), parse_double(parts[3], "viewport")};
    try {
        v.validate();
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    return v;
}

std::pair<int, int> parse_grid(std::string_view text)
{
    const auto x = text.find('x');
    if (x == std::string_view::npos)
        throw UsageError("grid: expected WxH");
    return {parse_int_in(text.substr(0, x), "grid width", 1, kMaxGridSide),
            parse_int_in(text.substr(x + 1), "grid height", 1, kMaxGridSide)};
}

std::vector<BigInt> parse_quotients(std::string_view text)
{
    std::vector<BigInt> out;
    for (auto part : split(text, ',')) {
        if (part.empty() || !std::all_of(part.begin(), part.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
            throw UsageError(fmt::format("quotients: '{}' is not a positive integer", part));
        BigInt q{std::string(part)};
        if (q < 1)
            throw UsageError("quotients: partial quotients must be at least 1");
        out.push_back(std::move(q));
    }
    return out;
}

precision::Quad parse_alpha(std::string_view text)
{
    text = trim(text);
    if (text == "golden")
        return (precision::Quad(sqrt(precision::Quad(5))) - 1) / 2;
    parse_double(text, "alpha"); // syntax check
    try {
        return precision::Quad(std::string(text));
    } catch (const std::exception&) {
        throw UsageError(fmt::format("alpha: cannot parse '{}'", text));
    }
}

// ---------------------------------------------------------------------------
// Key table

struct KeySpec {
    std::string name;
    std::vector<std::string> commands; // empty: every command
    std::string help;
    std::function<void(ExperimentConfig&, std::string_view)> set;

    bool applies_to(const std::string& command) const
    {
        return commands.empty() || std::find(commands.begin(), commands.end(), command) != commands.end();
    }
};

const std::vector<KeySpec>& key_table()
{
    static const std::vector<KeySpec> table = [] {
        std::vector<KeySpec> t;
        const std::vector<std::string> all;
        t.push_back({"c", all, "parameter c as re,im", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.c = parse_complex(v);
                         cfg.preset.clear();
                     }});
        t.push_back({"preset", all, "basilica | chebyshev | golden_siegel | airplane_root",
                     [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.c = preset_parameter(trim(v));
                         cfg.preset = std::string(trim(v));
                     }});
        t.push_back({"n", {"orbits", "pressure", "bunches", "near-point", "disc-pattern", "distortion"},
                     "period / depth / iterate count",
                     [](ExperimentConfig& cfg, std::string_view v) { cfg.n = parse_int_in(v, "n", 1, kMaxN); }});
        t.push_back({"n_min", {"bunches"}, "sweep bunches from n_min to n", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.n_min = parse_int_in(v, "n_min", 1, kMaxN);
                     }});
        t.push_back({"minimal_only", {"orbits"}, "only cycles of minimal period n",
                     [](ExperimentConfig& cfg, std::string_view v) { cfg.minimal_only = parse_bool(v, "minimal_only"); }});
        t.push_back({"period", {"portrait", "near-point", "disc-pattern", "distortion"}, "period of the base cycle",
                     [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.period = parse_int_in(v, "period", 1, kMaxPeriod);
                     }});
        t.push_back({"orbit_index", {"portrait", "near-point", "disc-pattern", "distortion"},
                     "index among cycles of the given minimal period", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.orbit_index = parse_int_in(v, "orbit_index", 0, 1 << 24);
                     }});
        t.push_back({"fixed", {"pressure", "near-point", "disc-pattern", "distortion"},
                     "use the fixed point alpha or beta", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.fixed = one_of(v, "fixed", {"", "alpha", "beta"});
                     }});
        t.push_back({"z", {"pressure", "near-point", "distortion"}, "explicit point re,im",
                     [](ExperimentConfig& cfg, std::string_view v) { cfg.z = parse_complex(v); }});
        t.push_back({"t", {"pressure"}, "t grid start:stop:step or comma list", [](ExperimentConfig& cfg, std::string_view v) {
                         parse_t_grid(v);
                         cfg.t = std::string(trim(v));
                     }});
        t.push_back({"delta", {"bunches", "near-point", "disc-pattern", "render"}, "comma list of delta values",
                     [](ExperimentConfig& cfg, std::string_view v) {
                         auto d = parse_real_list(v);
                         for (double x : d)
                             if (!(x > 0.0))
                                 throw UsageError("delta: values must be positive");
                         cfg.delta = std::move(d);
                     }});
        t.push_back({"mode", {"bunches"}, "H or BMS", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.mode = one_of(v, "mode", {"H", "BMS"});
                     }});
        t.push_back({"r", {"bunches", "distortion"}, "BMS threshold / distortion radius",
                     [](ExperimentConfig& cfg, std::string_view v) { cfg.r = parse_positive(v, "r"); }});
        t.push_back({"r0", {"near-point", "disc-pattern"}, "base radius r0",
                     [](ExperimentConfig& cfg, std::string_view v) { cfg.r0 = parse_positive(v, "r0"); }});
        t.push_back({"C", {"disc-pattern"}, "enlargement factor C", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.C = parse_positive(v, "C");
                     }});
        t.push_back({"search", {"near-point", "disc-pattern"}, "automatic | catalog | local",
                     [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.search = one_of(v, "search", {"automatic", "catalog", "local"});
                     }});
        t.push_back({"samples", {"distortion"}, "Halton sample count", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.samples = parse_size_in(v, "samples", 2, kMaxSamples);
                     }});
        t.push_back({"alpha", {"bryuno"}, "rotation number: decimal literal or golden",
                     [](ExperimentConfig& cfg, std::string_view v) {
                         parse_alpha(v);
                         cfg.alpha = std::string(trim(v));
                     }});
        t.push_back({"quotients", {"bryuno"}, "partial quotients a_1,a_2,... (overrides alpha)",
                     [](ExperimentConfig& cfg, std::string_view v) {
                         parse_quotients(v);
                         cfg.quotients = std::string(trim(v));
                     }});
        t.push_back({"terms", {"bryuno"}, "number of terms N", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.terms = parse_int_in(v, "terms", 2, kMaxTerms);
                     }});
        t.push_back({"angles", {"rays", "render"}, "comma list of num/den", [](ExperimentConfig& cfg, std::string_view v) {
                         parse_angle_list(v);
                         cfg.angles = std::string(trim(v));
                     }});
        t.push_back({"julia_points", {"render"}, "inverse-iteration sample count",
                     [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.julia_points = parse_size_in(v, "julia_points", 0, kMaxJuliaPoints);
                     }});
        t.push_back({"grid", {"render"}, "escape-time grid WxH (empty for none)",
                     [](ExperimentConfig& cfg, std::string_view v) {
                         if (!trim(v).empty())
                             parse_grid(trim(v));
                         cfg.grid = std::string(trim(v));
                     }});
        t.push_back({"grid_iter", {"render"}, "escape-time iteration cap", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.grid_iter = parse_int_in(v, "grid_iter", 1, 1 << 20);
                     }});
        t.push_back({"viewport", {"render"}, "xmin,xmax,ymin,ymax", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.viewport = parse_viewport(v);
                     }});
        t.push_back({"marker_period", {"render"}, "mark cycles of this minimal period (0: none)",
                     [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.marker_period = parse_int_in(v, "marker_period", 0, kMaxPeriod);
                     }});
        t.push_back({"bunch_n", {"render"}, "highlight bunches of this period (0: none)",
                     [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.bunch_n = parse_int_in(v, "bunch_n", 0, kMaxPeriod);
                     }});
        t.push_back({"bits", all, "mantissa bits (53..256)", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.precision.mantissa_bits = parse_int_in(v, "bits", 53, precision::kMaxMantissaBits);
                     }});
        t.push_back({"newton_tol", all, "Newton tolerance", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.precision.newton_tol = parse_positive(v, "newton_tol");
                     }});
        t.push_back({"dedup_tol", all, "root deduplication tolerance", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.precision.dedup_tol = parse_positive(v, "dedup_tol");
                     }});
        t.push_back({"max_iter", all, "iteration cap", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.precision.max_iter = parse_int_in(v, "max_iter", 1, 1 << 24);
                     }});
        t.push_back({"seed", all, "sampling seed", [](ExperimentConfig& cfg, std::string_view v) {
                         cfg.seed = parse_integer<std::uint64_t>(v, "seed");
                     }});
        t.push_back({"out", all, "output directory", [](ExperimentConfig& cfg, std::string_view v) {
                         if (trim(v).empty())
                             throw UsageError("out: empty path");
                         cfg.output_dir = std::string(trim(v));
                     }});
        return t;
    }();
    return table;
}

const std::set<std::string> kPrecisionKeys{"bits", "newton_tol", "dedup_tol", "max_iter"};

std::string normalize_key(std::string_view key)
{
    std::string k(trim(key));
    std::replace(k.begin(), k.end(), '-', '_');
    return k;
}

std::string flag_name(const std::string& key)
{
    std::string f = key;
    std::replace(f.begin(), f.end(), '_', '-');
    return "--" + f;
}

// ---------------------------------------------------------------------------
// Output helpers

std::string num(double x) { return fmt::format("{:.17g}", x); }

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

json cjson_list(std::span<const cplx> zs)
{
    json a = json::array();
    for (auto z : zs)
        a.push_back(cjson(z));
    return a;
}

struct Artifact {
    std::string name;
    std::string content;
};

Artifact json_artifact(std::string name, const json& doc) { return {std::move(name), doc.dump(2) + "\n"}; }

json envelope(const ExperimentConfig& cfg)
{
    json doc;
    doc["schema"] = kSchemaVersion;
    doc["command"] = cfg.command;
    doc["c"] = cjson(cfg.c);
    return doc;
}

struct Center {
    cplx z;
    int period = 1;
    std::vector<cplx> cycle;
    std::string source;
};

PeriodicOrbit select_orbit(OrbitCatalog& catalog, int period, int index)
{
    auto orbits = catalog.orbits_of_minimal_period(period);
    if (index < 0 || static_cast<std::size_t>(index) >= orbits.size())
        throw DomainError(fmt::format("no cycle of minimal period {} at index {} ({} found)", period, index,
                                      orbits.size()));
    return orbits[static_cast<std::size_t>(index)];
}

Center resolve_center(const ExperimentConfig& cfg, OrbitCatalog& catalog, bool allow_explicit)
{
    const QuadraticMap& map = catalog.map();
    if (allow_explicit && cfg.z) {
        Center c{*cfg.z, cfg.period, {}, "z"};
        const auto seg = iterate_orbit(map, *cfg.z, cfg.period - 1);
        c.cycle = seg.points;
        return c;
    }
    if (!cfg.fixed.empty()) {
        if (cfg.period != 1)
            throw UsageError("fixed: requires period 1");
        const auto ab = alpha_beta_fixed_points(map);
        const cplx z = cfg.fixed == "alpha" ? ab.alpha : ab.beta;
        return {z, 1, {z}, cfg.fixed};
    }
    const auto orbit = select_orbit(catalog, cfg.period, cfg.orbit_index);
    return {orbit.points.front(), cfg.period, orbit.points,
            fmt::format("cycle {} of minimal period {}", cfg.orbit_index, cfg.period)};
}

TrappedSearchMethod search_method(const std::string& s)
{
    if (s == "catalog")
        return TrappedSearchMethod::catalog;
    if (s == "local")
        return TrappedSearchMethod::local;
    return TrappedSearchMethod::automatic;
}

json orbit_json(const PeriodicOrbit& o)
{
    return {{"minimal_period", o.minimal_period},
            {"multiplier", cjson(o.multiplier)},
            {"multiplier_abs", std::abs(o.multiplier)},
            {"stability", to_string(o.stability)},
            {"multiplicity", o.multiplicity},
            {"multiplier_spread", o.multiplier_spread},
            {"points", cjson_list(o.points)}};
}

json trapped_json(const TrappedOrbitReport& r)
{
    return {{"method", to_string(r.method)}, {"period", r.period}, {"radius", r.radius},
            {"radii", r.radii},              {"count", r.count},   {"bound", r.bound},
            {"pass", r.pass},                {"witnesses", cjson_list(r.witnesses)}};
}

json bunch_json(const BunchReport& r)
{
    return {{"n", r.n},
            {"mode", to_string(r.mode)},
            {"param", r.param},
            {"threshold", r.threshold},
            {"orbit_count", r.orbit_count},
            {"max_cluster", r.max_cluster},
            {"component_bound", r.component_bound},
            {"bound", r.bound},
            {"hard_bound", r.hard_bound},
            {"pass", r.pass},
            {"clusters", r.clusters}};
}

json estimate_json(const PressureEstimate& e)
{
    json j{{"t", e.t},
           {"n", e.n},
           {"mode", to_string(e.mode)},
           {"value", e.value},
           {"log_sum", e.log_sum},
           {"terms", e.terms},
           {"negative_t", e.negative_t}};
    if (e.mode == PressureMode::periodic) {
        j["excluded_attracting"] = e.excluded_attracting;
        j["indifferent_kept"] = e.indifferent_kept;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Commands

std::vector<Artifact> run_orbits(const ExperimentConfig& cfg)
{
    OrbitCatalog catalog(QuadraticMap(cfg.c), cfg.precision);
    const auto orbits = cfg.minimal_only ? catalog.orbits_of_minimal_period(cfg.n) : catalog.orbits(cfg.n);
    std::string csv = "orbit,minimal_period,index,re,im,multiplier_re,multiplier_im,multiplier_abs,stability,"
                      "multiplicity\n";
    json list = json::array();
    std::size_t points = 0;
    for (std::size_t k = 0; k < orbits.size(); ++k) {
        const auto& o = orbits[k];
        for (std::size_t i = 0; i < o.points.size(); ++i)
            csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", k, o.minimal_period, i, num(o.points[i].real()),
                               num(o.points[i].imag()), num(o.multiplier.real()), num(o.multiplier.imag()),
                               num(std::abs(o.multiplier)), to_string(o.stability), o.multiplicity);
        points += o.points.size() * static_cast<std::size_t>(o.multiplicity);
        list.push_back(orbit_json(o));
    }
    json doc = envelope(cfg);
    doc["n"] = cfg.n;
    doc["minimal_only"] = cfg.minimal_only;
    doc["orbit_count"] = orbits.size();
    doc["point_count"] = points;
    doc["orbits"] = std::move(list);
    return {{"orbits.csv", std::move(csv)}, json_artifact("orbits.json", doc)};
}

std::vector<Artifact> run_rays(const ExperimentConfig& cfg)
{
    const auto angles = parse_angle_list(cfg.angles);
    if (angles.empty())
        throw UsageError("rays: --angles is required");
    const QuadraticMap map(cfg.c);
    std::string csv = "angle,potential,re,im\n";
    json rays = json::array();
    for (const auto& a : angles) {
        const auto trace = trace_ray(map, a);
        const auto land = estimate_landing(map, a);
        for (const auto& s : trace.samples)
            csv += fmt::format("{},{},{},{}\n", a.to_string(), num(s.potential), num(s.z.real()), num(s.z.imag()));
        json r{{"angle", a.to_string()},
               {"status", to_string(trace.status)},
               {"samples", trace.samples.size()},
               {"landing",
                {{"z", cjson(land.z)},
                 {"residual", land.residual},
                 {"converged", land.converged},
                 {"status", to_string(land.status)}}}};
        if (!trace.samples.empty())
            r["last_sample"] = {{"potential", trace.samples.back().potential}, {"z", cjson(trace.samples.back().z)}};
        rays.push_back(std::move(r));
    }
    json doc = envelope(cfg);
    doc["rays"] = std::move(rays);
    return {{"rays.csv", std::move(csv)}, json_artifact("rays.json", doc)};
}

std::vector<Artifact> run_portrait(const ExperimentConfig& cfg)
{
    OrbitCatalog catalog(QuadraticMap(cfg.c), cfg.precision);
    const auto orbit = select_orbit(catalog, cfg.period, cfg.orbit_index);
    const auto report = portrait_at_orbit(catalog.map(), orbit, cfg.period);
    json doc = envelope(cfg);
    doc["period"] = cfg.period;
    doc["orbit_index"] = cfg.orbit_index;
    doc["orbit"] = orbit_json(orbit);
    doc["portrait"] = portrait_to_json(report.portrait);
    const auto& v = report.validation;
    doc["validation"] = {{"finite_nonempty", v.finite_nonempty},
                         {"doubling_preserves_order", v.doubling_preserves_order},
                         {"common_period", v.common_period},
                         {"pairwise_unlinked", v.pairwise_unlinked},
                         {"valid", v.valid()},
                         {"violations", v.violations}};
    if (v.valid()) {
        const auto cls = classify_portrait(report.portrait);
        doc["classification"] = {{"kind", to_string(cls.kind)},
                                 {"valence", cls.valence},
                                 {"rays_per_cycle", cls.rays_per_cycle},
                                 {"ray_period", cls.ray_period},
                                 {"ray_cycles", cls.ray_cycles}};
    } else {
        doc["classification"] = nullptr;
    }
    doc["landing_points"] = cjson_list(report.points);
    doc["max_landing_error"] = report.max_landing_error;
    std::string csv = "set,angle,point_re,point_im\n";
    for (std::size_t i = 0; i < report.portrait.sets.size(); ++i)
        for (const auto& a : report.portrait.sets[i])
            csv += fmt::format("{},{},{},{}\n", i + 1, a.to_string(), num(report.points[i].real()),
                               num(report.points[i].imag()));
    return {{"portrait.csv", std::move(csv)}, json_artifact("portrait.json", doc)};
}

std::vector<Artifact> run_pressure(const ExperimentConfig& cfg)
{
    const auto grid = parse_t_grid(cfg.t);
    OrbitCatalog catalog(QuadraticMap(cfg.c), cfg.precision);
    cplx base;
    if (cfg.z)
        base = *cfg.z;
    else if (!cfg.fixed.empty()) {
        const auto ab = alpha_beta_fixed_points(catalog.map());
        base = cfg.fixed == "alpha" ? ab.alpha : ab.beta;
    } else
        base = default_tree_basepoint(catalog.map());
    const auto curve = pressure_comparison(catalog, base, grid, cfg.n);

    std::string csv = "t,n,mode,value,log_sum,terms\n";
    json estimates = json::array();
    std::vector<ChartSeries> series;
    auto emit = [&](const std::vector<PressureEstimate>& list) {
        if (list.empty())
            return;
        ChartSeries s{fmt::format("{} n={}", to_string(list.front().mode), list.front().n), {}, {}};
        for (const auto& e : list) {
            csv += fmt::format("{},{},{},{},{},{}\n", num(e.t), e.n, to_string(e.mode), num(e.value),
                               num(e.log_sum), e.terms);
            estimates.push_back(estimate_json(e));
            s.x.push_back(e.t);
            s.y.push_back(e.value);
        }
        series.push_back(std::move(s));
    };
    emit(curve.periodic_prev);
    emit(curve.tree_prev);
    emit(curve.periodic);
    emit(curve.tree);

    json doc = envelope(cfg);
    doc["n"] = cfg.n;
    doc["t_grid"] = curve.t_grid;
    doc["basepoint"] = cjson(base);
    doc["estimates"] = std::move(estimates);
    doc["discrepancy"] = curve.discrepancy;
    doc["discrepancy_prev"] = curve.discrepancy_prev;
    doc["trend_non_increasing"] = curve.trend_non_increasing;
    return {{"pressure.csv", std::move(csv)},
            json_artifact("pressure.json", doc),
            {"pressure.svg", render_line_chart(series, "t", "pressure")}};
}

std::vector<Artifact> run_bunches(const ExperimentConfig& cfg)
{
    OrbitCatalog catalog(QuadraticMap(cfg.c), cfg.precision);
    const int lo = cfg.n_min.value_or(cfg.n);
    if (lo > cfg.n)
        throw UsageError("n_min must not exceed n");
    std::vector<BunchReport> reports;
    for (int n = lo; n <= cfg.n; ++n) {
        if (cfg.mode == "H") {
            for (double d : cfg.delta)
                reports.push_back(verify_hypothesis_h(catalog, n, d));
        } else {
            std::vector<PeriodicOrbit> kept;
            for (auto& o : catalog.orbits_of_minimal_period(n))
                if (o.stability != Stability::attracting)
                    kept.push_back(std::move(o));
            auto r = bunch_clusters(kept, BunchMode::BMS, cfg.r);
            r.n = n;
            reports.push_back(std::move(r));
        }
    }
    std::string csv = "n,mode,param,threshold,orbit_count,max_cluster,component_bound,bound,hard_bound,pass\n";
    json list = json::array();
    bool pass = true;
    for (const auto& r : reports) {
        csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.n, to_string(r.mode), num(r.param), num(r.threshold),
                           r.orbit_count, r.max_cluster, r.component_bound, num(r.bound), r.hard_bound,
                           r.pass ? "true" : "false");
        list.push_back(bunch_json(r));
        pass = pass && r.pass;
    }
    json doc = envelope(cfg);
    doc["reports"] = std::move(list);
    doc["pass"] = pass;
    return {{"bunches.csv", std::move(csv)}, json_artifact("bunches.json", doc)};
}

std::vector<Artifact> run_near_point(const ExperimentConfig& cfg)
{
    OrbitCatalog catalog(QuadraticMap(cfg.c), cfg.precision);
    const auto center = resolve_center(cfg, catalog, true);
    std::string csv = "delta,method,period,radius,count,bound,pass\n";
    json list = json::array();
    bool pass = true;
    for (double d : cfg.delta) {
        const auto r = count_orbits_near_point(catalog, center.z, center.period, cfg.n, d, cfg.r0,
                                               search_method(cfg.search));
        csv += fmt::format("{},{},{},{},{},{},{}\n", num(d), to_string(r.method), r.period, num(r.radius), r.count,
                           r.bound, r.pass ? "true" : "false");
        json j = trapped_json(r);
        j["delta"] = d;
        list.push_back(std::move(j));
        pass = pass && r.pass;
    }
    json doc = envelope(cfg);
    doc["z0"] = cjson(center.z);
    doc["p"] = center.period;
    doc["n"] = cfg.n;
    doc["r0"] = cfg.r0;
    doc["source"] = center.source;
    doc["reports"] = std::move(list);
    doc["pass"] = pass;
    return {{"near-point.csv", std::move(csv)}, json_artifact("near-point.json", doc)};
}

std::vector<Artifact> run_disc_pattern(const ExperimentConfig& cfg)
{
    OrbitCatalog catalog(QuadraticMap(cfg.c), cfg.precision);
    const auto center = resolve_center(cfg, catalog, false);
    std::string csv = "delta,method,period,count,bound,pass\n";
    json list = json::array();
    bool pass = true;
    for (double d : cfg.delta) {
        const auto pattern = DiscPattern::around_orbit(center.cycle, cfg.n, cfg.C, cfg.r0, d);
        const auto r = count_orbits_in_disc_pattern(catalog, pattern, search_method(cfg.search));
        csv += fmt::format("{},{},{},{},{},{}\n", num(d), to_string(r.method), r.period, r.count, r.bound,
                           r.pass ? "true" : "false");
        json j = trapped_json(r);
        j["delta"] = d;
        j["centers"] = cjson_list(pattern.centers());
        j["disc_radii"] = pattern.radii();
        list.push_back(std::move(j));
        pass = pass && r.pass;
    }
    json doc = envelope(cfg);
    doc["p"] = center.period;
    doc["n"] = cfg.n;
    doc["C"] = cfg.C;
    doc["r0"] = cfg.r0;
    doc["source"] = center.source;
    doc["reports"] = std::move(list);
    doc["pass"] = pass;
    return {{"disc-pattern.csv", std::move(csv)}, json_artifact("disc-pattern.json", doc)};
}

std::vector<Artifact> run_distortion(const ExperimentConfig& cfg)
{
    OrbitCatalog catalog(QuadraticMap(cfg.c), cfg.precision);
    const auto center = resolve_center(cfg, catalog, true);
    const auto r = distortion_ratio(catalog.map(), center.z, cfg.r, cfg.n, cfg.samples, center.period);
    std::string csv = "center_re,center_im,r,n,p,samples,sup_ratio_minus_one,per_step_log_derivative_bound,"
                      "center_multiplier_modulus,indifferent_regime\n";
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", num(r.center.real()), num(r.center.imag()), num(r.r), r.n,
                       r.p, r.samples, num(r.sup_ratio_minus_one), num(r.per_step_log_derivative_bound),
                       num(r.center_multiplier_modulus), r.indifferent_regime ? "true" : "false");
    json doc = envelope(cfg);
    doc["center"] = cjson(r.center);
    doc["source"] = center.source;
    doc["r"] = r.r;
    doc["n"] = r.n;
    doc["p"] = r.p;
    doc["samples"] = r.samples;
    doc["sup_ratio_minus_one"] = r.sup_ratio_minus_one;
    doc["per_step_log_derivative_bound"] = r.per_step_log_derivative_bound;
    doc["center_multiplier_modulus"] = r.center_multiplier_modulus;
    doc["indifferent_regime"] = r.indifferent_regime;
    return {{"distortion.csv", std::move(csv)}, json_artifact("distortion.json", doc)};
}

std::vector<Artifact> run_bryuno(const ExperimentConfig& cfg)
{
    ContinuedFractionReport r;
    if (!cfg.quotients.empty()) {
        const auto q = parse_quotients(cfg.quotients);
        if (q.size() < static_cast<std::size_t>(cfg.terms) + 1)
            throw UsageError(fmt::format("quotients: need at least terms + 1 = {} values", cfg.terms + 1));
        r = bryuno_sums_from_quotients(q, cfg.terms);
    } else {
        r = bryuno_sums(parse_alpha(cfg.alpha), cfg.terms);
    }
    std::string csv = "k,a,q,bryuno_term,perez_marco_term\n";
    json rows = json::array();
    for (std::size_t k = 0; k < r.partial_quotients.size(); ++k) {
        const bool has_term = k < r.bryuno_terms.size();
        csv += fmt::format("{},{},{},{},{}\n", k + 1, r.partial_quotients[k].str(), r.denominators[k].str(),
                           has_term ? num(r.bryuno_terms[k]) : "", has_term ? num(r.perez_marco_terms[k]) : "");
        json row{{"k", k + 1}, {"a", r.partial_quotients[k].str()}, {"q", r.denominators[k].str()}};
        if (has_term) {
            row["bryuno_term"] = r.bryuno_terms[k];
            row["perez_marco_term"] = r.perez_marco_terms[k];
        }
        rows.push_back(std::move(row));
    }
    json doc{{"schema", kSchemaVersion}, {"command", cfg.command}};
    doc["alpha"] = r.alpha;
    doc["terms"] = cfg.terms;
    doc["rows"] = std::move(rows);
    doc["bryuno_partial"] = r.bryuno_partial;
    doc["perez_marco_partial"] = r.perez_marco_partial;
    return {{"bryuno.csv", std::move(csv)}, json_artifact("bryuno.json", doc)};
}

std::vector<Artifact> run_render(const ExperimentConfig& cfg)
{
    const QuadraticMap map(cfg.c);
    SceneModel scene;
    scene.viewport = cfg.viewport.value_or(Viewport{});
    scene.julia_points = julia_inverse_iteration(map, cfg.julia_points, cfg.seed);
    if (!cfg.grid.empty()) {
        const auto [w, h] = parse_grid(cfg.grid);
        scene.escape_grid = escape_time_grid(map, scene.viewport, w, h, cfg.grid_iter);
    }
    for (const auto& a : parse_angle_list(cfg.angles)) {
        const auto trace = trace_ray(map, a);
        RayPolyline line{a, {}};
        for (const auto& s : trace.samples)
            line.points.push_back(s.z);
        const auto land = estimate_landing(map, a);
        if (land.converged)
            line.points.push_back(land.z);
        scene.rays.push_back(std::move(line));
    }
    OrbitCatalog catalog(map, cfg.precision);
    if (cfg.marker_period > 0) {
        const auto orbits = catalog.orbits_of_minimal_period(cfg.marker_period);
        for (std::size_t k = 0; k < orbits.size(); ++k)
            for (std::size_t i = 0; i < orbits[k].points.size(); ++i)
                scene.markers.push_back({orbits[k].points[i], fmt::format("{}.{}.{}", cfg.marker_period, k, i)});
    }
    json bunch_doc = nullptr;
    if (cfg.bunch_n > 0) {
        std::vector<PeriodicOrbit> kept;
        for (auto& o : catalog.orbits_of_minimal_period(cfg.bunch_n))
            if (o.stability != Stability::attracting)
                kept.push_back(std::move(o));
        const auto report = bunch_clusters(kept, BunchMode::H, cfg.delta.front());
        for (const auto& cluster : report.clusters) {
            if (cluster.size() < 2)
                continue;
            BunchGroup g;
            for (std::size_t idx : cluster)
                g.points.insert(g.points.end(), kept[idx].points.begin(), kept[idx].points.end());
            scene.bunches.push_back(std::move(g));
        }
        bunch_doc = bunch_json(report);
    }
    const SceneModel clipped = clip_to_viewport(scene);
    json doc = envelope(cfg);
    const auto& v = clipped.viewport;
    doc["viewport"] = {v.xmin, v.xmax, v.ymin, v.ymax};
    doc["julia_points"] = clipped.julia_points.size();
    doc["escape_grid"] = {clipped.escape_grid.width, clipped.escape_grid.height};
    json rays = json::array();
    for (const auto& r : clipped.rays)
        rays.push_back({{"angle", r.angle.to_string()}, {"points", r.points.size()}});
    doc["rays"] = std::move(rays);
    doc["markers"] = clipped.markers.size();
    doc["bunch_groups"] = clipped.bunches.size();
    doc["bunches"] = std::move(bunch_doc);
    return {{"scene.svg", render_scene(clipped)}, json_artifact("render.json", doc)};
}

using Runner = std::vector<Artifact> (*)(const ExperimentConfig&);

const std::map<std::string, Runner>& runners()
{
    static const std::map<std::string, Runner> table{
        {"orbits", run_orbits},         {"rays", run_rays},
        {"portrait", run_portrait},     {"pressure", run_pressure},
        {"bunches", run_bunches},       {"near-point", run_near_point},
        {"disc-pattern", run_disc_pattern}, {"distortion", run_distortion},
        {"bryuno", run_bryuno},         {"render", run_render}};
    return table;
}

void validate_config(const ExperimentConfig& cfg)
{
    if (!runners().contains(cfg.command))
        throw UsageError(fmt::format("unknown command '{}'", cfg.command));
    try {
        cfg.precision.validate();
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    if (cfg.delta.empty())
        throw UsageError("delta: at least one value is required");
    if (cfg.n_min && *cfg.n_min > cfg.n)
        throw UsageError("n_min must not exceed n");
    if (!is_finite(cfg.c))
        throw UsageError("c must be finite");
    if (cfg.output_dir.empty())
        throw UsageError("out: empty path");
}

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw DomainError("cannot open " + path.string() + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os)
        throw DomainError("failed writing " + path.string());
}

} // namespace

// ---------------------------------------------------------------------------

const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names{"orbits",     "rays",         "portrait",   "pressure", "bunches",
                                                "near-point", "disc-pattern", "distortion", "bryuno",   "render"};
    return names;
}

cplx preset_parameter(std::string_view name)
{
    if (name == "basilica")
        return {-1.0, 0.0};
    if (name == "chebyshev")
        return {-2.0, 0.0};
    if (name == "airplane_root")
        return {-1.75, 0.0};
    if (name == "golden_siegel") {
        using precision::Quad;
        const Quad theta = (Quad(sqrt(Quad(5))) - 1) / 2;
        const Quad angle = 2 * boost::math::constants::pi<Quad>() * theta;
        const Quad re = Quad(cos(angle)), im = Quad(sin(angle));
        // lambda/2 - lambda^2/4
        const Quad cr = re / 2 - (re * re - im * im) / 4;
        const Quad ci = im / 2 - (2 * re * im) / 4;
        return {static_cast<double>(cr), static_cast<double>(ci)};
    }
    throw UsageError(fmt::format("unknown preset '{}' (basilica, chebyshev, golden_siegel, airplane_root)", name));
}

cplx parse_complex(std::string_view text)
{
    const auto parts = split(text, ',');
    if (parts.size() == 1)
        return {parse_double(parts[0], "complex literal"), 0.0};
    if (parts.size() != 2)
        throw UsageError(fmt::format("complex literal: expected re,im, got '{}'", text));
    return {parse_double(parts[0], "complex literal"), parse_double(parts[1], "complex literal")};
}

std::vector<double> parse_t_grid(std::string_view text)
{
    text = trim(text);
    if (text.find(':') == std::string_view::npos)
        return parse_real_list(text);
    const auto parts = split(text, ':');
    if (parts.size() != 3)
        throw UsageError(fmt::format("t grid: expected start:stop:step, got '{}'", text));
    const double start = parse_double(parts[0], "t grid start");
    const double stop = parse_double(parts[1], "t grid stop");
    const double step = parse_double(parts[2], "t grid step");
    if (!(step > 0.0))
        throw UsageError("t grid: step must be positive");
    if (stop < start)
        throw UsageError("t grid: stop must not be below start");
    const double count = std::floor((stop - start) / step + 0.5);
    if (count + 1.0 > static_cast<double>(kMaxGridPoints))
        throw UsageError(fmt::format("t grid: more than {} points", kMaxGridPoints));
    std::vector<double> grid;
    for (long k = 0; k <= static_cast<long>(count); ++k)
        grid.push_back(start + static_cast<double>(k) * step);
    return grid;
}

std::vector<Angle> parse_angle_list(std::string_view text)
{
    std::vector<Angle> out;
    if (trim(text).empty())
        return out;
    for (auto part : split(text, ',')) {
        try {
            out.push_back(Angle::parse(part));
        } catch (const DomainError& e) {
            throw UsageError(fmt::format("angle '{}': {}", part, e.what()));
        }
    }
    return out;
}

std::vector<double> parse_real_list(std::string_view text)
{
    std::vector<double> out;
    for (auto part : split(text, ','))
        out.push_back(parse_double(part, "number list"));
    if (out.size() > kMaxGridPoints)
        throw UsageError(fmt::format("number list: more than {} values", kMaxGridPoints));
    return out;
}

json config_to_json(const ExperimentConfig& cfg)
{
    json j;
    j["command"] = cfg.command;
    j["preset"] = cfg.preset;
    j["c"] = cjson(cfg.c);
    j["n"] = cfg.n;
    j["n_min"] = cfg.n_min ? json(*cfg.n_min) : json(nullptr);
    j["period"] = cfg.period;
    j["t"] = cfg.t;
    j["z"] = cfg.z ? cjson(*cfg.z) : json(nullptr);
    j["fixed"] = cfg.fixed;
    j["delta"] = cfg.delta;
    j["mode"] = cfg.mode;
    j["r"] = cfg.r;
    j["r0"] = cfg.r0;
    j["C"] = cfg.C;
    j["orbit_index"] = cfg.orbit_index;
    j["samples"] = cfg.samples;
    j["alpha"] = cfg.alpha;
    j["quotients"] = cfg.quotients;
    j["terms"] = cfg.terms;
    j["angles"] = cfg.angles;
    j["minimal_only"] = cfg.minimal_only;
    j["julia_points"] = cfg.julia_points;
    j["grid"] = cfg.grid;
    j["grid_iter"] = cfg.grid_iter;
    if (cfg.viewport)
        j["viewport"] = {cfg.viewport->xmin, cfg.viewport->xmax, cfg.viewport->ymin, cfg.viewport->ymax};
    else
        j["viewport"] = nullptr;
    j["marker_period"] = cfg.marker_period;
    j["bunch_n"] = cfg.bunch_n;
    j["search"] = cfg.search;
    j["precision"] = {{"mantissa_bits", cfg.precision.mantissa_bits},
                      {"newton_tol", cfg.precision.newton_tol},
                      {"dedup_tol", cfg.precision.dedup_tol},
                      {"max_iter", cfg.precision.max_iter}};
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    return j;
}

ExperimentConfig config_from_json(const json& doc)
{
    if (!doc.is_object())
        throw UsageError("config: expected a JSON object");
    static const std::set<std::string> known{
        "command", "preset",  "c",      "n",         "n_min",     "period",       "t",        "z",
        "fixed",   "delta",   "mode",   "r",         "r0",        "C",            "orbit_index", "samples",
        "alpha",   "quotients", "terms", "angles",   "minimal_only", "julia_points", "grid",  "grid_iter",
        "viewport", "marker_period", "bunch_n", "search", "precision", "output_dir", "seed"};
    for (const auto& [key, _] : doc.items())
        if (!known.contains(key))
            throw UsageError(fmt::format("config: unknown key '{}'", key));
    ExperimentConfig cfg;
    try {
        auto get = [&](const char* key, auto& field) {
            if (doc.contains(key))
                doc.at(key).get_to(field);
        };
        auto get_cplx = [&](const json& v) {
            if (!v.is_array() || v.size() != 2)
                throw UsageError("config: complex values are [re, im]");
            return cplx(v[0].get<double>(), v[1].get<double>());
        };
        get("command", cfg.command);
        get("preset", cfg.preset);
        if (doc.contains("c"))
            cfg.c = get_cplx(doc["c"]);
        get("n", cfg.n);
        if (doc.contains("n_min") && !doc["n_min"].is_null())
            cfg.n_min = doc["n_min"].get<int>();
        get("period", cfg.period);
        get("t", cfg.t);
        if (doc.contains("z") && !doc["z"].is_null())
            cfg.z = get_cplx(doc["z"]);
        get("fixed", cfg.fixed);
        get("delta", cfg.delta);
        get("mode", cfg.mode);
        get("r", cfg.r);
        get("r0", cfg.r0);
        get("C", cfg.C);
        get("orbit_index", cfg.orbit_index);
        get("samples", cfg.samples);
        get("alpha", cfg.alpha);
        get("quotients", cfg.quotients);
        get("terms", cfg.terms);
        get("angles", cfg.angles);
        get("minimal_only", cfg.minimal_only);
        get("julia_points", cfg.julia_points);
        get("grid", cfg.grid);
        get("grid_iter", cfg.grid_iter);
        if (doc.contains("viewport") && !doc["viewport"].is_null()) {
            const auto& v = doc["viewport"];
            if (!v.is_array() || v.size() != 4)
                throw UsageError("config: viewport is [xmin, xmax, ymin, ymax]");
            cfg.viewport = Viewport{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
        }
        get("marker_period", cfg.marker_period);
        get("bunch_n", cfg.bunch_n);
        get("search", cfg.search);
        if (doc.contains("precision")) {
            const auto& p = doc["precision"];
            static const std::set<std::string> pk{"mantissa_bits", "newton_tol", "dedup_tol", "max_iter"};
            for (const auto& [key, _] : p.items())
                if (!pk.contains(key))
                    throw UsageError(fmt::format("config: unknown precision key '{}'", key));
            if (p.contains("mantissa_bits"))
                cfg.precision.mantissa_bits = p["mantissa_bits"].get<int>();
            if (p.contains("newton_tol"))
                cfg.precision.newton_tol = p["newton_tol"].get<double>();
            if (p.contains("dedup_tol"))
                cfg.precision.dedup_tol = p["dedup_tol"].get<double>();
            if (p.contains("max_iter"))
                cfg.precision.max_iter = p["max_iter"].get<int>();
        }
        get("output_dir", cfg.output_dir);
        get("seed", cfg.seed);
    } catch (const json::exception& e) {
        throw UsageError(fmt::format("config: {}", e.what()));
    }
    // Re-validate string-typed settings through the same parsers as flags.
    if (!cfg.fixed.empty())
        one_of(cfg.fixed, "fixed", {"alpha", "beta"});
    one_of(cfg.mode, "mode", {"H", "BMS"});
    one_of(cfg.search, "search", {"automatic", "catalog", "local"});
    parse_t_grid(cfg.t);
    parse_angle_list(cfg.angles);
    if (!cfg.grid.empty())
        parse_grid(cfg.grid);
    if (!cfg.quotients.empty())
        parse_quotients(cfg.quotients);
    parse_alpha(cfg.alpha);
    if (cfg.viewport) {
        try {
            cfg.viewport->validate();
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
    }
    validate_config(cfg);
    return cfg;
}

std::vector<std::string> keys_for_command(const std::string& command)
{
    std::vector<std::string> keys;
    for (const auto& k : key_table())
        if (k.applies_to(command))
            keys.push_back(k.name);
    return keys;
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value)
{
    const std::string k = normalize_key(key);
    for (const auto& entry : key_table()) {
        if (entry.name != k)
            continue;
        if (!entry.applies_to(cfg.command))
            throw UsageError(fmt::format("key '{}' does not apply to command '{}'", k, cfg.command));
        entry.set(cfg, value);
        return;
    }
    throw UsageError(fmt::format("unknown key '{}'", k));
}

void apply_ini_file(ExperimentConfig& cfg, const fs::path& path)
{
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw UsageError(fmt::format("config file: {}", e.what()));
    }
    for (const auto& [section, body] : tree) {
        if (body.empty())
            throw UsageError(fmt::format("config file: key '{}' outside a section", section));
        if (section != "run" && section != "precision")
            throw UsageError(fmt::format("config file: unknown section [{}]", section));
        for (const auto& [key, value] : body) {
            const std::string k = normalize_key(key);
            const bool is_precision = kPrecisionKeys.contains(k);
            if (is_precision != (section == "precision"))
                throw UsageError(fmt::format("config file: key '{}' belongs in [{}]", k,
                                             is_precision ? "precision" : "run"));
            apply_setting(cfg, k, value.data());
        }
    }
}

std::vector<std::string> execute(const ExperimentConfig& cfg)
{
    validate_config(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const auto artifacts = runners().at(cfg.command)(cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw DomainError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
    std::vector<std::string> names;
    for (const auto& a : artifacts) {
        write_file(dir / a.name, a.content);
        names.push_back(a.name);
    }
    json manifest{{"schema", kSchemaVersion},
                  {"tool", "quadray"},
                  {"version", QUADRAY_VERSION},
                  {"command", cfg.command},
                  {"config", config_to_json(cfg)},
                  {"outputs", names},
                  {"wall_time_seconds", wall}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    return names;
}

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Quadratic dynamics experiments: periodic orbits, external rays, pressure, bunches.", "quadray"};
    app.set_version_flag("--version", QUADRAY_VERSION);
    app.require_subcommand(0, 1);
    std::string manifest_path;
    std::string manifest_out;
    app.add_option("--manifest", manifest_path, "re-run the configuration stored in a manifest.json");
    app.add_option("--out", manifest_out, "output directory for --manifest re-runs");

    struct SubState {
        CLI::App* app = nullptr;
        std::string config;
        std::map<std::string, std::string> values;
    };
    std::map<std::string, SubState> subs;
    for (const auto& name : command_names()) {
        auto& s = subs[name];
        s.app = app.add_subcommand(name, "run " + name);
        s.app->add_option("--config", s.config, "ini file with [run] and [precision] sections");
        for (const auto& entry : key_table())
            if (entry.applies_to(name))
                s.app->add_option(flag_name(entry.name), s.values[entry.name], entry.help);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kExitOk;
        }
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        ExperimentConfig cfg;
        if (!manifest_path.empty()) {
            if (!app.get_subcommands().empty())
                throw UsageError("--manifest cannot be combined with a command");
            std::ifstream is(manifest_path);
            if (!is)
                throw UsageError("cannot read manifest " + manifest_path);
            json doc;
            try {
                doc = json::parse(is);
            } catch (const json::exception& e) {
                throw UsageError(fmt::format("manifest: {}", e.what()));
            }
            if (!doc.contains("config"))
                throw UsageError("manifest: missing config");
            cfg = config_from_json(doc["config"]);
            if (!manifest_out.empty())
                cfg.output_dir = manifest_out;
        } else {
            if (app.get_subcommands().empty())
                throw UsageError("a command is required (" + fmt::format("{}", fmt::join(command_names(), ", ")) +
                                 ")\n" + app.help());
            if (!manifest_out.empty())
                throw UsageError("--out before the command only applies to --manifest re-runs");
            CLI::App* sub = app.get_subcommands().front();
            auto& s = subs.at(sub->get_name());
            cfg.command = sub->get_name();
            if (!s.config.empty())
                apply_ini_file(cfg, s.config);
            const bool has_c = sub->get_option("--c")->count() > 0;
            const bool has_preset = sub->get_option("--preset")->count() > 0;
            if (has_c && has_preset)
                throw UsageError("--c and --preset are mutually exclusive");
            for (const auto& entry : key_table())
                if (entry.applies_to(cfg.command) && sub->get_option(flag_name(entry.name))->count() > 0)
                    apply_setting(cfg, entry.name, s.values.at(entry.name));
        }
        const auto names = execute(cfg);
        for (const auto& n : names)
            out << (fs::path(cfg.output_dir) / n).string() << "\n";
        out << (fs::path(cfg.output_dir) / "manifest.json").string() << "\n";
        return kExitOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        err << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    }
}

} // namespace quadray
