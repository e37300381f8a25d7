#include "quadray/bunch_analysis.hpp"

#include "quadray/core_dynamics.hpp"
#include "quadray/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <unordered_map>

namespace quadray {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite_positive(double v, const char* what)
{
    if (!std::isfinite(v) || v <= 0.0)
        throw DomainError(std::string(what) + " must be finite and positive");
}

} // namespace

double orbit_metric(const QuadraticMap& map, cplx x, cplx y, int n)
{
    if (n < 0)
        throw DomainError("orbit_metric: n must be non-negative");
    const double esc = map.escape_radius();
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!(std::abs(x) <= esc) || !(std::abs(y) <= esc))
            throw DomainError("orbit_metric: orbit escapes at step " + std::to_string(i));
        best = std::max(best, std::abs(x - y));
        x = evaluate(map, x);
        y = evaluate(map, y);
    }
    return best;
}

namespace {

// max_i |a_i - b_{i+s}|, abandoning the scan once `cap` is reached.
double aligned_distance(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t s, double cap)
{
    const std::size_t n = a.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(a[i] - b[(i + s) % n]));
        if (worst >= cap)
            return worst;
    }
    return worst;
}

} // namespace

double orbit_distance(const PeriodicOrbit& a, const PeriodicOrbit& b)
{
    if (a.points.size() != b.points.size() || a.points.empty())
        throw DomainError("orbit_distance: orbits must be non-empty and of equal length");
    double best = kInf;
    for (std::size_t s = 0; s < b.points.size(); ++s)
        best = std::min(best, aligned_distance(a.points, b.points, s, best));
    return best;
}

std::string to_string(BunchMode m)
{
    return m == BunchMode::H ? "H" : "BMS";
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x)
    {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b)
            parent[std::max(a, b)] = std::min(a, b);
    }
};

struct Edge {
    std::size_t other;
    double distance;
};

// For every orbit, the orbits at distance below the threshold. Candidates
// come from a grid over all orbit points: a close pair forces the base point
// of one orbit near some point of the other.
std::vector<std::vector<Edge>> close_pairs(std::span<const PeriodicOrbit> orbits, double threshold)
{
    const std::size_t m = orbits.size();
    std::vector<std::vector<Edge>> edges(m);
    if (m == 0)
        return edges;
    const std::size_t n = orbits[0].points.size();

    struct Key {
        long long x, y;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept
        {
            return std::hash<long long>()(k.x * 0x9E3779B97F4A7C15LL ^ k.y);
        }
    };
    const double h = threshold;
    auto key_of = [h](cplx z) {
        return Key{static_cast<long long>(std::floor(z.real() / h)), static_cast<long long>(std::floor(z.imag() / h))};
    };
    std::unordered_map<Key, std::vector<std::pair<std::size_t, std::size_t>>, KeyHash> grid;
    for (std::size_t o = 0; o < m; ++o)
        for (std::size_t j = 0; j < n; ++j)
            grid[key_of(orbits[o].points[j])].push_back({o, j});

    parallel_for(m, [&](std::size_t a) {
        std::vector<double> best(m, kInf);
        const cplx base = orbits[a].points[0];
        const Key k = key_of(base);
        for (long long dx = -1; dx <= 1; ++dx)
            for (long long dy = -1; dy <= 1; ++dy) {
                const auto it = grid.find(Key{k.x + dx, k.y + dy});
                if (it == grid.end())
                    continue;
                for (const auto& [b, j] : it->second) {
                    if (b == a || std::abs(orbits[b].points[j] - base) >= threshold)
                        continue;
                    best[b] = std::min(best[b], aligned_distance(orbits[a].points, orbits[b].points, j,
                                                                  std::min(best[b], threshold)));
                }
            }
        for (std::size_t b = 0; b < m; ++b)
            if (best[b] < threshold)
                edges[a].push_back({b, best[b]});
    });
    // Symmetrize: the rotation minimum is symmetric, but a candidate can be
    // discovered from one side only when grid cells differ.
    std::vector<std::vector<Edge>> sym(m);
    for (std::size_t a = 0; a < m; ++a)
        for (const Edge& e : edges[a]) {
            sym[a].push_back(e);
            sym[e.other].push_back({a, e.distance});
        }
    for (auto& list : sym) {
        std::sort(list.begin(), list.end(), [](const Edge& x, const Edge& y) {
            return x.other != y.other ? x.other < y.other : x.distance < y.distance;
        });
        list.erase(std::unique(list.begin(), list.end(),
                               [](const Edge& x, const Edge& y) { return x.other == y.other; }),
                   list.end());
    }
    return sym;
}

// Complete-linkage agglomeration inside one component; stops when the
// closest pair of clusters has diameter >= threshold.
std::vector<std::vector<std::size_t>> complete_linkage(const std::vector<std::size_t>& members,
                                                       const std::vector<std::vector<Edge>>& edges,
                                                       double threshold)
{
    const std::size_t k = members.size();
    std::vector<std::vector<double>> d(k, std::vector<double>(k, kInf));
    std::unordered_map<std::size_t, std::size_t> local;
    for (std::size_t i = 0; i < k; ++i)
        local[members[i]] = i;
    for (std::size_t i = 0; i < k; ++i)
        for (const Edge& e : edges[members[i]])
            d[i][local.at(e.other)] = e.distance;

    std::vector<std::vector<std::size_t>> clusters(k);
    std::vector<bool> alive(k, true);
    for (std::size_t i = 0; i < k; ++i)
        clusters[i] = {members[i]};
    while (true) {
        double best = kInf;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (!alive[i])
                continue;
            for (std::size_t j = i + 1; j < k; ++j)
                if (alive[j] && d[i][j] < best) {
                    best = d[i][j];
                    bi = i;
                    bj = j;
                }
        }
        if (!(best < threshold))
            break;
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        clusters[bj].clear();
        alive[bj] = false;
        for (std::size_t x = 0; x < k; ++x) {
            d[bi][x] = d[x][bi] = std::max(d[bi][x], d[bj][x]);
        }
        d[bi][bi] = kInf;
    }
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < k; ++i)
        if (alive[i]) {
            std::sort(clusters[i].begin(), clusters[i].end());
            out.push_back(std::move(clusters[i]));
        }
    return out;
}

} // namespace

BunchReport bunch_clusters(std::span<const PeriodicOrbit> orbits, BunchMode mode, double param)
{
    require_finite_positive(param, "bunch_clusters: parameter");
    BunchReport report;
    report.mode = mode;
    report.param = param;
    report.orbit_count = orbits.size();
    const std::size_t n = orbits.empty() ? 0 : orbits[0].points.size();
    for (const auto& o : orbits)
        if (o.points.size() != n || n == 0)
            throw DomainError("bunch_clusters: all orbits must have the same non-zero length");
    report.n = static_cast<int>(n);
    report.threshold = mode == BunchMode::H ? std::exp(-param * static_cast<double>(n)) : param;
    report.hard_bound = 2 * n;
    report.bound = mode == BunchMode::H ? std::exp(param * static_cast<double>(n)) : static_cast<double>(2 * n);
    if (orbits.empty())
        return report;

    const auto edges = close_pairs(orbits, report.threshold);
    UnionFind uf(orbits.size());
    for (std::size_t a = 0; a < orbits.size(); ++a)
        for (const Edge& e : edges[a])
            uf.unite(a, e.other);
    std::vector<std::vector<std::size_t>> components(orbits.size());
    for (std::size_t a = 0; a < orbits.size(); ++a)
        components[uf.find(a)].push_back(a);

    for (const auto& comp : components) {
        if (comp.empty())
            continue;
        report.component_bound = std::max(report.component_bound, comp.size());
        for (auto& cl : complete_linkage(comp, edges, report.threshold))
            report.clusters.push_back(std::move(cl));
    }
    std::sort(report.clusters.begin(), report.clusters.end());

    // Certification by direct recomputation.
    for (const auto& cl : report.clusters) {
        for (std::size_t i = 0; i < cl.size(); ++i)
            for (std::size_t j = i + 1; j < cl.size(); ++j)
                if (!(orbit_distance(orbits[cl[i]], orbits[cl[j]]) < report.threshold))
                    throw std::logic_error("bunch_clusters: emitted cluster failed pairwise certification");
        report.max_cluster = std::max(report.max_cluster, cl.size());
    }
    report.pass = static_cast<double>(report.max_cluster) <= std::min(report.bound, static_cast<double>(report.hard_bound));
    return report;
}

BunchReport verify_hypothesis_h(OrbitCatalog& catalog, int n, double delta)
{
    if (n < 1)
        throw DomainError("verify_hypothesis_h: n must be at least 1");
    std::vector<PeriodicOrbit> kept;
    for (auto& o : catalog.orbits_of_minimal_period(n))
        if (o.stability != Stability::attracting)
            kept.push_back(std::move(o));
    BunchReport report = bunch_clusters(kept, BunchMode::H, delta);
    if (kept.empty()) {
        report.n = n;
        report.threshold = std::exp(-delta * n);
        report.bound = std::exp(delta * n);
        report.hard_bound = 2 * static_cast<std::size_t>(n);
    }
    return report;
}

BunchReport verify_hypothesis_h(const QuadraticMap& map, int n, double delta, const PrecisionConfig& cfg)
{
    OrbitCatalog catalog(map, cfg);
    return verify_hypothesis_h(catalog, n, delta);
}

// ---------------------------------------------------------------------------
// Disc patterns

DiscPattern::DiscPattern(std::vector<cplx> centers, std::vector<double> radii, int n, double C, double r0,
                         double delta)
    : centers_(std::move(centers)), radii_(std::move(radii)), n_(n), C_(C), r0_(r0), delta_(delta)
{
    if (centers_.empty() || centers_.size() != radii_.size())
        throw DomainError("DiscPattern: need as many radii as centers, at least one");
    if (n_ < 1)
        throw DomainError("DiscPattern: n must be at least 1");
    require_finite_positive(C_, "DiscPattern: C");
    require_finite_positive(r0_, "DiscPattern: r0");
    if (!std::isfinite(delta_) || delta_ < 0.0)
        throw DomainError("DiscPattern: delta must be finite and non-negative");
    const double k = r0_ * std::exp(-delta_ * n_ * p());
    for (std::size_t i = 0; i < centers_.size(); ++i) {
        if (!is_finite(centers_[i]))
            throw DomainError("DiscPattern: non-finite center");
        require_finite_positive(radii_[i], "DiscPattern: radius");
        const double dist_crit = std::max(0.0, std::abs(centers_[i]) - C_ * radii_[i]);
        if (2.0 * radii_[i] > k * dist_crit)
            throw DomainError("DiscPattern: disc " + std::to_string(i) +
                              " is too large for its distance to the critical point");
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(centers_[i] - centers_[j]) <= C_ * (radii_[i] + radii_[j]))
                throw DomainError("DiscPattern: enlarged discs " + std::to_string(j) + " and " + std::to_string(i) +
                                  " intersect");
    }
}

DiscPattern DiscPattern::around_orbit(std::span<const cplx> orbit, int n, double C, double r0, double delta)
{
    if (orbit.empty())
        throw DomainError("DiscPattern::around_orbit: empty orbit");
    require_finite_positive(C, "DiscPattern: C");
    const double k = r0 * std::exp(-delta * n * static_cast<double>(orbit.size()));
    std::vector<double> radii;
    for (cplx z : orbit)
        radii.push_back(k * std::abs(z) / (2.0 + k * C) * (1.0 - 1e-12));
    return DiscPattern(std::vector<cplx>(orbit.begin(), orbit.end()), std::move(radii), n, C, r0, delta);
}

// ---------------------------------------------------------------------------
// Periodic points trapped in a union of discs

namespace {

double radical_inverse(std::uint64_t i, std::uint64_t base)
{
    double inv = 1.0 / static_cast<double>(base), f = inv, out = 0.0;
    while (i > 0) {
        out += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return out;
}

cplx halton_in_disc(std::uint64_t i, std::uint64_t b1, std::uint64_t b2, cplx center, double r)
{
    return center + r * std::sqrt(radical_inverse(i, b1)) * std::polar(1.0, kTwoPi * radical_inverse(i, b2));
}

struct Disc {
    cplx center;
    double r;
    bool contains(cplx z) const { return std::abs(z - center) <= r; }
};

// A located cycle and the distance below which two points of it are
// numerically indistinguishable (wider at multiple roots).
struct FoundCycle {
    std::vector<cplx> points;
    double tol = 0.0;
};

// Thrown internally when the inverse-branch solver cannot conclude.
struct Unsettled {};

struct TrappedSearch {
    const QuadraticMap& map;
    std::vector<Disc> discs;
    std::function<bool(std::size_t, std::size_t)> allowed; // may f carry disc a into disc b
    int N;

    // Orbits x_0..x_{N-1} with x_0 in `start`, f^N(x_0) = x_0 and a closed
    // admissible itinerary through the discs.
    std::vector<FoundCycle> run(std::size_t start) const;

private:
    struct Branch {
        bool possible = false;
        bool contracting = false; // unique inverse branch with Lipschitz bound < inf
        double log_lipschitz = 0.0;
        int sign = 1;
    };

    Branch branch(std::size_t a, std::size_t b) const;
    bool follows_itinerary(const std::vector<cplx>& orbit, std::size_t start) const;
    std::vector<FoundCycle> by_inverse_branches(std::size_t start) const;
    std::vector<FoundCycle> by_argument_principle(std::size_t start) const;
};

TrappedSearch::Branch TrappedSearch::branch(std::size_t a, std::size_t b) const
{
    Branch out;
    if (!allowed(a, b))
        return out;
    const Disc& da = discs[a];
    const Disc& db = discs[b];
    const cplx c = map.c();
    // f(D_a) lies in B(f(center_a), r_a (2|center_a| + r_a)).
    const double image_r = da.r * (2.0 * std::abs(da.center) + da.r);
    if (std::abs(evaluate(map, da.center) - db.center) > image_r + db.r)
        return out;
    out.possible = true;
    const double gap = std::abs(db.center - c) - db.r;
    if (gap <= 0.0)
        return out; // D_b holds the critical value: no single-valued inverse
    const double lip = 1.0 / (2.0 * std::sqrt(gap));
    const cplx w = std::sqrt(db.center - c);
    const double spread = lip * db.r;
    const bool plus = std::abs(w - da.center) <= spread + da.r;
    const bool minus = std::abs(-w - da.center) <= spread + da.r;
    if (plus && minus)
        return out;
    if (!plus && !minus) {
        out.possible = false;
        return out;
    }
    out.contracting = true;
    out.sign = plus ? 1 : -1;
    out.log_lipschitz = std::log(lip);
    return out;
}

bool TrappedSearch::follows_itinerary(const std::vector<cplx>& orbit, std::size_t start) const
{
    const std::size_t m = discs.size();
    std::vector<bool> cur(m, false), next(m, false);
    cur[start] = discs[start].contains(orbit[0]);
    for (int k = 1; k <= N; ++k) {
        const cplx z = orbit[static_cast<std::size_t>(k) % orbit.size()];
        std::fill(next.begin(), next.end(), false);
        bool any = false;
        for (std::size_t b = 0; b < m; ++b) {
            if (!discs[b].contains(z))
                continue;
            for (std::size_t a = 0; a < m; ++a)
                if (cur[a] && allowed(a, b)) {
                    next[b] = true;
                    any = true;
                    break;
                }
        }
        if (!any)
            return false;
        std::swap(cur, next);
    }
    return cur[start];
}

std::vector<FoundCycle> TrappedSearch::by_inverse_branches(std::size_t start) const
{
    const std::size_t m = discs.size();
    std::vector<std::vector<Branch>> br(m, std::vector<Branch>(m));
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            br[a][b] = branch(a, b);

    // Enumerate closed walks start -> ... -> start of length N.
    constexpr std::size_t kWalkCap = 4096;
    std::vector<std::vector<std::size_t>> walks;
    std::vector<std::size_t> walk{start};
    bool overflow = false;
    std::function<void()> dfs = [&] {
        if (overflow)
            return;
        if (static_cast<int>(walk.size()) == N) {
            if (br[walk.back()][start].possible) {
                if (walks.size() >= kWalkCap) {
                    overflow = true;
                    return;
                }
                walks.push_back(walk);
            }
            return;
        }
        for (std::size_t b = 0; b < m; ++b)
            if (br[walk.back()][b].possible) {
                walk.push_back(b);
                dfs();
                walk.pop_back();
            }
    };
    dfs();
    if (overflow)
        throw PrecisionExhausted("trapped-orbit search: too many itineraries");

    std::vector<FoundCycle> found;
    for (const auto& w : walks) {
        double log_lip = 0.0;
        for (int k = 0; k < N; ++k) {
            const Branch& e = br[w[k]][w[(k + 1) % N]];
            if (!e.contracting)
                throw std::logic_error("non-contracting itinerary reached the inverse-branch solver");
            log_lip += e.log_lipschitz;
        }
        if (!(log_lip <= -kLog2))
            throw std::logic_error("itinerary without contraction reached the inverse-branch solver");
        // Fixed point of the composed inverse branch, unique by contraction.
        std::vector<cplx> orbit(N);
        cplx x = discs[start].center;
        bool converged = false;
        for (int iter = 0; iter < 400 && !converged; ++iter) {
            cplx y = x;
            for (int k = N - 1; k >= 0; --k) {
                const Branch& e = br[w[k]][w[(k + 1) % N]];
                y = static_cast<double>(e.sign) * std::sqrt(y - map.c());
                orbit[k] = y;
            }
            converged = std::abs(y - x) <= 1e-15 * (1.0 + std::abs(x));
            x = y;
        }
        if (!converged)
            throw Unsettled{}; // iterates left the discs, where the bound does not apply
        bool inside = true;
        for (int k = 0; k < N && inside; ++k)
            inside = discs[w[k]].contains(orbit[k]);
        if (inside)
            found.push_back({std::move(orbit), 1e-8 * (1.0 + std::abs(x))});
    }
    return found;
}

struct Evaluated {
    cplx value; // f^N(z) - z
    cplx slope;
};

std::vector<FoundCycle> TrappedSearch::by_argument_principle(std::size_t start) const
{
    const Disc& d = discs[start];
    const cplx c = map.c();
    auto F = [&](cplx z) {
        const auto vd = detail::iterate_with_derivative(z, c, N);
        return Evaluated{vd.value - z, vd.derivative - 1.0};
    };

    // Winding number of F around the circle |z - center| = R.
    auto winding = [&](double R, double floor_abs) -> std::optional<long long> {
        auto at = [&](double t) { return d.center + R * std::polar(1.0, kTwoPi * t); };
        double total = 0.0;
        std::function<bool(double, double, cplx, cplx, int)> arc = [&](double t0, double t1, cplx f0, cplx f1,
                                                                      int depth) -> bool {
            const double step = std::arg(f1 / f0);
            if (std::abs(step) < 0.5) {
                total += step;
                return true;
            }
            if (depth > 30)
                return false;
            const double tm = 0.5 * (t0 + t1);
            const cplx fm = F(at(tm)).value;
            if (!is_finite(fm) || std::abs(fm) <= floor_abs)
                return false;
            return arc(t0, tm, f0, fm, depth + 1) && arc(tm, t1, fm, f1, depth + 1);
        };
        constexpr int kSamples = 256;
        std::vector<cplx> vals(kSamples + 1);
        for (int i = 0; i <= kSamples; ++i) {
            vals[i] = i == kSamples ? vals[0] : F(at(static_cast<double>(i) / kSamples)).value;
            if (!is_finite(vals[i]) || std::abs(vals[i]) <= floor_abs)
                return std::nullopt;
        }
        for (int i = 0; i < kSamples; ++i)
            if (!arc(static_cast<double>(i) / kSamples, static_cast<double>(i + 1) / kSamples, vals[i], vals[i + 1],
                     0))
                return std::nullopt;
        const double turns = total / kTwoPi;
        const double rounded = std::round(turns);
        if (std::abs(turns - rounded) > 0.1)
            return std::nullopt;
        return static_cast<long long>(rounded);
    };

    double R = 0.0;
    long long W = -1;
    for (double factor : {1.001, 1.0023, 1.0051, 1.011, 1.023}) {
        R = d.r * factor;
        if (const auto w = winding(R, 1e-13 * R)) {
            W = *w;
            break;
        }
    }
    if (W < 0)
        throw PrecisionExhausted("trapped-orbit search: argument principle failed on the disc boundary");

    // Locate the W zeros by deflated Newton from starts spread over the disc.
    std::vector<cplx> zeros;
    std::vector<cplx> starts{d.center};
    const auto budget = static_cast<std::uint64_t>(16 * W + 64);
    for (std::uint64_t i = 1; i <= budget; ++i)
        starts.push_back(halton_in_disc(i, 2, 3, d.center, R));
    // Zeros near the rim are often reached more easily from outside.
    for (std::uint64_t i = 0; i < budget / 2; ++i)
        starts.push_back(d.center + 1.5 * R * std::polar(1.0, kTwoPi * radical_inverse(i + 1, 2)));
    for (cplx z : starts) {
        if (static_cast<long long>(zeros.size()) >= W)
            break;
        bool ok = false;
        for (int iter = 0; iter < 200; ++iter) {
            const Evaluated e = F(z);
            if (!is_finite(e.value) || e.value == 0.0) {
                ok = e.value == 0.0;
                break;
            }
            cplx denom = e.slope / e.value;
            for (cplx r : zeros)
                denom -= 1.0 / (z - r);
            if (denom == 0.0 || !is_finite(denom))
                break;
            const cplx step = 1.0 / denom;
            z -= step;
            if (std::abs(z - d.center) > 4.0 * R)
                break;
            if (std::abs(step) <= 1e-14 * (1.0 + std::abs(z))) {
                ok = true;
                break;
            }
        }
        if (!ok || std::abs(z - d.center) > R)
            continue;
        for (int iter = 0; iter < 8; ++iter) {
            const Evaluated e = F(z);
            if (e.slope == 0.0 || !is_finite(e.value))
                break;
            z -= e.value / e.slope;
        }
        zeros.push_back(z);
    }
    if (static_cast<long long>(zeros.size()) < W)
        throw PrecisionExhausted("trapped-orbit search: located " + std::to_string(zeros.size()) + " of " +
                                 std::to_string(W) + " zeros in a disc");

    // Roundoff-limited accuracy of each zero: the radius at which some jet
    // term of F reaches the evaluation noise. Zeros closer than that are one
    // (multiple) root.
    auto accuracy = [&](cplx z) {
        auto j = detail::iterate_jet<8>(z, c, N);
        j[0] -= z;
        j[1] -= 1.0;
        const double noise = 1e-13 * (1.0 + std::abs(z));
        double acc = kInf;
        for (std::size_t k = 1; k < j.size(); ++k)
            if (std::abs(j[k]) > 0.0)
                acc = std::min(acc, std::pow(noise / std::abs(j[k]), 1.0 / static_cast<double>(k)));
        return std::max(acc, 1e-8 * (1.0 + std::abs(z)));
    };
    std::vector<cplx> reps;
    std::vector<double> tols;
    for (cplx z : zeros) {
        const double a = accuracy(z);
        bool merged = false;
        for (std::size_t r = 0; r < reps.size() && !merged; ++r)
            if (std::abs(reps[r] - z) <= 10.0 * std::max(a, tols[r])) {
                tols[r] = std::max(tols[r], a);
                merged = true;
            }
        if (!merged) {
            reps.push_back(z);
            tols.push_back(a);
        }
    }

    std::vector<FoundCycle> found;
    for (std::size_t r = 0; r < reps.size(); ++r) {
        std::vector<cplx> orbit(N);
        orbit[0] = reps[r];
        for (int k = 1; k < N; ++k)
            orbit[k] = evaluate(map, orbit[k - 1]);
        if (follows_itinerary(orbit, start))
            found.push_back({std::move(orbit), 10.0 * tols[r]});
    }
    return found;
}

std::vector<FoundCycle> TrappedSearch::run(std::size_t start) const
{
    const std::size_t m = discs.size();
    // Worst log-Lipschitz product over closed walks from start; any
    // non-contracting edge on a reachable closed walk forces the fallback.
    bool all_contracting = true;
    std::vector<double> best(m, -kInf);
    best[start] = 0.0;
    std::vector<std::vector<Branch>> br(m, std::vector<Branch>(m));
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            br[a][b] = branch(a, b);
    // Reachability both ways so only edges on closed walks count.
    std::vector<std::vector<bool>> reach_from(N + 1, std::vector<bool>(m, false));
    reach_from[0][start] = true;
    for (int k = 0; k < N; ++k)
        for (std::size_t a = 0; a < m; ++a)
            if (reach_from[k][a])
                for (std::size_t b = 0; b < m; ++b)
                    if (br[a][b].possible)
                        reach_from[k + 1][b] = true;
    std::vector<std::vector<bool>> reach_to(N + 1, std::vector<bool>(m, false));
    reach_to[N][start] = true;
    for (int k = N - 1; k >= 0; --k)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                if (br[a][b].possible && reach_to[k + 1][b])
                    reach_to[k][a] = true;
    for (int k = 0; k < N; ++k) {
        std::vector<double> next(m, -kInf);
        for (std::size_t a = 0; a < m; ++a) {
            if (!(reach_from[k][a] && reach_to[k][a]))
                continue;
            for (std::size_t b = 0; b < m; ++b) {
                if (!br[a][b].possible || !reach_to[k + 1][b])
                    continue;
                if (!br[a][b].contracting)
                    all_contracting = false;
                else if (best[a] > -kInf)
                    next[b] = std::max(next[b], best[a] + br[a][b].log_lipschitz);
            }
        }
        best = std::move(next);
    }
    if (!reach_to[0][start])
        return {};
    // A product above 1/2 converges too slowly to be worth iterating.
    if (all_contracting && best[start] <= -kLog2) {
        try {
            return by_inverse_branches(start);
        } catch (const Unsettled&) {
        }
    }
    return by_argument_principle(start);
}

int minimal_period_of(std::span<const cplx> orbit, double tol)
{
    const int N = static_cast<int>(orbit.size());
    for (int k = 1; k < N; ++k)
        if (N % k == 0 && std::abs(orbit[k] - orbit[0]) <= tol)
            return k;
    return N;
}

bool same_cycle(std::span<const cplx> orbit, std::span<const cplx> cycle, double tol)
{
    return std::any_of(cycle.begin(), cycle.end(), [&](cplx w) { return std::abs(w - orbit[0]) <= tol; });
}

TrappedSearchMethod resolve_method(TrappedSearchMethod method, int N, const PrecisionConfig& cfg)
{
    cfg.validate();
    if (N < 1)
        throw DomainError("trapped-orbit search: period must be at least 1");
    if (method == TrappedSearchMethod::automatic)
        method = N <= std::min(kCatalogSearchCap, enumeration_cap(cfg)) ? TrappedSearchMethod::catalog
                                                                        : TrappedSearchMethod::local;
    if (method == TrappedSearchMethod::catalog && N > enumeration_cap(cfg))
        throw DomainError("trapped-orbit search: period " + std::to_string(N) + " exceeds the enumeration cap");
    if (method == TrappedSearchMethod::local && N > 64)
        throw DomainError("trapped-orbit search: period " + std::to_string(N) + " exceeds the local-search cap of 64");
    return method;
}

// Cycles of minimal period N through the discs, deduplicated.
std::vector<FoundCycle> local_cycles(const TrappedSearch& search, std::span<const std::size_t> starts)
{
    std::vector<FoundCycle> orbits;
    for (std::size_t s : starts)
        for (auto& cyc : search.run(s)) {
            if (minimal_period_of(cyc.points, cyc.tol) != search.N)
                continue;
            const bool seen = std::any_of(orbits.begin(), orbits.end(), [&](const FoundCycle& o) {
                return same_cycle(cyc.points, o.points, std::max(cyc.tol, o.tol));
            });
            if (!seen)
                orbits.push_back(std::move(cyc));
        }
    return orbits;
}

} // namespace

std::string to_string(TrappedSearchMethod m)
{
    switch (m) {
    case TrappedSearchMethod::automatic:
        return "automatic";
    case TrappedSearchMethod::catalog:
        return "catalog";
    case TrappedSearchMethod::local:
        return "local";
    }
    return "unknown";
}

TrappedOrbitReport count_orbits_near_point(OrbitCatalog& catalog, cplx z0, int p, int n, double delta, double r0,
                                           TrappedSearchMethod method)
{
    const QuadraticMap& map = catalog.map();
    if (p < 1 || n < 1)
        throw DomainError("count_orbits_near_point: p and n must be at least 1");
    require_finite_positive(r0, "count_orbits_near_point: r0");
    if (!std::isfinite(delta) || delta < 0.0)
        throw DomainError("count_orbits_near_point: delta must be finite and non-negative");
    if (!is_finite(z0))
        throw DomainError("count_orbits_near_point: non-finite z0");
    const int N = n * p;

    std::vector<cplx> cycle(p);
    cycle[0] = z0;
    for (int i = 1; i < p; ++i)
        cycle[i] = evaluate(map, cycle[i - 1]);
    const double tol = 1e-8 * (1.0 + std::abs(z0));
    if (std::abs(evaluate(map, cycle[p - 1]) - z0) > tol)
        throw DomainError("count_orbits_near_point: z0 is not periodic with period " + std::to_string(p));
    for (int k = 1; k < p; ++k)
        if (p % k == 0 && std::abs(cycle[k] - z0) <= tol)
            throw DomainError("count_orbits_near_point: z0 has minimal period " + std::to_string(k) + ", not " +
                              std::to_string(p));

    TrappedOrbitReport report;
    report.method = resolve_method(method, N, catalog.precision());
    report.period = N;
    report.radius = r0 * std::exp(-delta * N);
    report.bound = static_cast<std::size_t>(p);
    const double multiplier = std::abs(derivative_along_orbit(map, z0, p));
    const bool indifferent = std::abs(multiplier - 1.0) <= 1e-3;

    std::vector<Disc> discs;
    for (int i = 0; i < p; ++i) {
        const double scale = indifferent && i > 0 ? std::abs(derivative_along_orbit(map, z0, i)) : 1.0;
        report.radii.push_back(report.radius * scale);
        discs.push_back({cycle[i], report.radii.back()});
    }
    auto in_union = [&](cplx z) { return std::any_of(discs.begin(), discs.end(), [&](const Disc& d) { return d.contains(z); }); };

    std::vector<FoundCycle> orbits;
    if (report.method == TrappedSearchMethod::catalog) {
        for (const auto& o : catalog.orbits_of_minimal_period(N))
            if (std::all_of(o.points.begin(), o.points.end(), in_union))
                orbits.push_back({o.points, tol});
    } else {
        const TrappedSearch search{map, discs, [](std::size_t, std::size_t) { return true; }, N};
        std::vector<std::size_t> starts(discs.size());
        std::iota(starts.begin(), starts.end(), 0);
        orbits = local_cycles(search, starts);
    }
    for (const auto& o : orbits)
        if (!same_cycle(o.points, cycle, std::max(o.tol, tol)))
            report.witnesses.push_back(o.points[0]);
    report.count = report.witnesses.size();
    report.pass = report.count <= report.bound;
    return report;
}

TrappedOrbitReport count_orbits_near_point(const QuadraticMap& map, cplx z0, int p, int n, double delta, double r0,
                                           const PrecisionConfig& cfg, TrappedSearchMethod method)
{
    OrbitCatalog catalog(map, cfg);
    return count_orbits_near_point(catalog, z0, p, n, delta, r0, method);
}

TrappedOrbitReport count_orbits_in_disc_pattern(OrbitCatalog& catalog, const DiscPattern& pattern,
                                                TrappedSearchMethod method)
{
    const int p = pattern.p();
    const int N = pattern.n() * p;

    TrappedOrbitReport report;
    report.method = resolve_method(method, N, catalog.precision());
    report.period = N;
    report.radius = pattern.r0() * std::exp(-pattern.delta() * N);
    report.radii = pattern.radii();
    report.bound = static_cast<std::size_t>(p);

    std::vector<Disc> discs;
    for (int i = 0; i < p; ++i)
        discs.push_back({pattern.centers()[i], pattern.radii()[i]});

    if (report.method == TrappedSearchMethod::catalog) {
        for (const auto& o : catalog.orbits_of_minimal_period(N))
            for (int s = 0; s < N; ++s) {
                bool ok = true;
                for (int k = 0; k < N && ok; ++k)
                    ok = discs[k % p].contains(o.points[(s + k) % N]);
                if (ok)
                    report.witnesses.push_back(o.points[s]);
            }
    } else {
        const auto np = static_cast<std::size_t>(p);
        const TrappedSearch search{catalog.map(), discs, [np](std::size_t a, std::size_t b) { return b == (a + 1) % np; },
                                   N};
        const std::size_t start = 0;
        // Every point f^{kp}(x) of a qualifying cycle qualifies as well.
        for (const auto& o : local_cycles(search, std::span<const std::size_t>(&start, 1)))
            for (int k = 0; k < pattern.n(); ++k)
                report.witnesses.push_back(o.points[static_cast<std::size_t>(k * p)]);
    }
    report.count = report.witnesses.size();
    report.pass = report.count <= report.bound;
    return report;
}

TrappedOrbitReport count_orbits_in_disc_pattern(const QuadraticMap& map, const DiscPattern& pattern,
                                                const PrecisionConfig& cfg, TrappedSearchMethod method)
{
    OrbitCatalog catalog(map, cfg);
    return count_orbits_in_disc_pattern(catalog, pattern, method);
}

// ---------------------------------------------------------------------------
// Distortion

DistortionReport distortion_ratio(const QuadraticMap& map, cplx center, double r, int n, std::size_t samples, int p)
{
    require_finite_positive(r, "distortion_ratio: r");
    if (n < 0 || p < 1)
        throw DomainError("distortion_ratio: need n >= 0 and p >= 1");
    if (samples == 0)
        throw DomainError("distortion_ratio: samples must be positive");
    if (!is_finite(center))
        throw DomainError("distortion_ratio: non-finite center");
    const cplx image = detail::iterate(center, map.c(), p);
    if (std::abs(image - center) > 1e-8 * (1.0 + std::abs(center)))
        throw DomainError("distortion_ratio: center is not fixed by f^" + std::to_string(p));

    DistortionReport report;
    report.center = center;
    report.r = r;
    report.n = n;
    report.p = p;
    report.samples = samples;
    report.center_multiplier_modulus = std::abs(derivative_along_orbit(map, center, p));
    report.indifferent_regime = std::abs(report.center_multiplier_modulus - 1.0) <= 1e-3;

    const double esc = map.escape_radius();
    std::vector<double> sup(samples, 0.0), logd(samples, 0.0);
    std::vector<int> escaped(samples, 0);
    parallel_for(samples, [&](std::size_t s) {
        // Index offset skips the degenerate first Halton points.
        const cplx x0 = halton_in_disc(s + 17, 2, 3, center, r);
        const cplx y0 = halton_in_disc(s + 17, 5, 7, center, r);
        logd[s] = std::max(std::abs(std::log(std::abs(derivative_along_orbit(map, x0, p)))),
                           std::abs(std::log(std::abs(derivative_along_orbit(map, y0, p)))));
        cplx x = x0, y = y0, dx = 1.0, dy = 1.0;
        for (int i = 0; i < n * p; ++i) {
            dx *= 2.0 * x;
            dy *= 2.0 * y;
            x = x * x + map.c();
            y = y * y + map.c();
            if (!(std::abs(x) <= esc) || !(std::abs(y) <= esc)) {
                escaped[s] = 1;
                return;
            }
            if ((i + 1) % p == 0)
                sup[s] = std::max(sup[s], std::abs(dx / dy - 1.0));
        }
    });
    if (std::any_of(escaped.begin(), escaped.end(), [](int e) { return e != 0; }))
        throw DomainError("distortion_ratio: a sample escaped");
    report.sup_ratio_minus_one = *std::max_element(sup.begin(), sup.end());
    report.per_step_log_derivative_bound = *std::max_element(logd.begin(), logd.end());
    return report;
}

GoodBadPartition good_bad_partition(const PeriodicOrbit& orbit, double delta)
{
    if (!std::isfinite(delta) || delta < 0.0)
        throw DomainError("good_bad_partition: delta must be finite and non-negative");
    GoodBadPartition out;
    const double n = static_cast<double>(orbit.points.size());
    out.threshold = std::exp(-n * delta / 2.0);
    for (std::size_t i = 0; i < orbit.points.size(); ++i)
        (std::abs(orbit.points[i]) >= out.threshold ? out.good : out.bad).push_back(i);
    out.a_bound = out.bad.size();
    return out;
}

} // namespace quadray
