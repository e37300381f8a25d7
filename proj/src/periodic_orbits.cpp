#include "quadray/periodic_orbits.hpp"

#include "quadray/parallel.hpp"
#include "quadray/precision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <unordered_map>

namespace quadray {

std::string to_string(Stability s)
{
    switch (s) {
    case Stability::repelling:
        return "repelling";
    case Stability::attracting:
        return "attracting";
    case Stability::parabolic_candidate:
        return "parabolic_candidate";
    case Stability::indifferent_candidate:
        return "indifferent_candidate";
    }
    return "unknown";
}

IncompleteEnumeration::IncompleteEnumeration(std::string what, std::vector<PeriodicPoint> found, long long expected)
    : DomainError(std::move(what)), found_(std::move(found)), expected_(expected)
{
}

int enumeration_cap(const PrecisionConfig& cfg)
{
    return cfg.mantissa_bits > 53 ? 28 : 20;
}

FixedPointPair alpha_beta_fixed_points(const QuadraticMap& map)
{
    const cplx s = std::sqrt(cplx(1.0) - 4.0 * map.c());
    cplx a = 0.5 * (1.0 - s);
    cplx b = 0.5 * (1.0 + s);
    if (a.real() > b.real() || (a.real() == b.real() && a.imag() > b.imag()))
        std::swap(a, b);
    return {a, b, s == cplx(0.0)};
}

namespace {

constexpr std::size_t kJetOrder = 8;
constexpr int kPullbackRounds = 6;

template <class Real>
class Enumerator {
public:
    using C = precision::Complex<Real>;

    struct Root {
        C z;
        int multiplicity = 1;
        double residual = 0.0;
        double isolation = std::numeric_limits<double>::infinity(); // no other root closer (estimate)
    };

    Enumerator(const QuadraticMap& map, int n, const PrecisionConfig& cfg)
        : c_(precision::from_cplx<Real>(map.c())), n_(n), cfg_(cfg),
          bound_(Real(4.0 * map.escape_radius())), newton_iter_(std::min(cfg.max_iter, 400))
    {
    }

    // Newton on F(z) = f^n(z) - z, optionally deflated by known roots.
    std::optional<Root> solve(C z, std::span<const Root> deflate = {}) const
    {
        const Real tol(cfg_.newton_tol);
        Real prev = std::numeric_limits<Real>::infinity();
        int slow = 0;
        bool converged = false;
        for (int it = 0; it < newton_iter_; ++it) {
            const auto [F, dF] = residual(z);
            // An escaping orbit can overflow dF first, which would fake a zero step.
            if (!precision::finite(F) || !precision::finite(dF))
                return std::nullopt;
            if (F == C(0)) {
                converged = true;
                break;
            }
            C step;
            if (deflate.empty()) {
                if (dF == C(0))
                    return std::nullopt;
                step = F / dF;
            } else {
                C ratio = dF / F;
                for (const auto& r : deflate)
                    ratio -= C(Real(r.multiplicity)) / (z - r.z);
                if (ratio == C(0))
                    return std::nullopt;
                step = C(1) / ratio;
            }
            z -= step;
            if (!precision::finite(z) || precision::modulus(z) > bound_)
                return std::nullopt;
            const Real s = precision::modulus(step);
            if (s <= tol * (Real(1) + precision::modulus(z))) {
                converged = true;
                break;
            }
            // Linear convergence signals a multiple root.
            if (it > 6 && s > Real(0.3) * prev && ++slow >= 6)
                break;
            prev = s;
        }
        if (!deflate.empty()) {
            if (!converged)
                return std::nullopt;
            return solve(z);
        }
        return finish(z, converged);
    }

    std::vector<C> pullback_seeds(const C& beta) const
    {
        const std::size_t leaves = std::size_t{1} << n_;
        std::vector<C> seeds(leaves);
        parallel_for(leaves, [&](std::size_t leaf) {
            std::vector<C> path(static_cast<std::size_t>(n_) + 1);
            path[0] = beta;
            for (int k = 1; k <= n_; ++k) {
                const C w = precision::principal_sqrt(path[k - 1] - c_);
                path[k] = ((leaf >> (n_ - k)) & 1u) ? C(-w) : w;
            }
            // Pull the leaf back along its own address a few times; this
            // contracts toward the periodic point sharing that address.
            C z = path[static_cast<std::size_t>(n_)];
            for (int round = 0; round < kPullbackRounds; ++round) {
                C w = z;
                for (int k = 1; k <= n_; ++k) {
                    const C s = precision::principal_sqrt(w - c_);
                    const C& ref = path[static_cast<std::size_t>(k)];
                    w = precision::modulus(s - ref) <= precision::modulus(s + ref) ? s : C(-s);
                }
                if (!precision::finite(w))
                    break;
                z = w;
            }
            seeds[leaf] = z;
        });
        return seeds;
    }

    std::vector<C> critical_orbit_seeds() const
    {
        C z(0);
        for (int i = 0; i < 4000; ++i) {
            z = z * z + c_;
            if (precision::modulus(z) > bound_)
                return {};
        }
        std::vector<C> out;
        for (int i = 0; i < n_; ++i) {
            out.push_back(z);
            z = z * z + c_;
        }
        return out;
    }

    std::pair<C, C> residual(const C& z) const
    {
        const auto vd = detail::iterate_with_derivative(z, c_, n_);
        return {vd.value - z, vd.derivative - C(1)};
    }

private:
    struct Jet {
        std::array<C, kJetOrder + 1> a;
    };

    Jet jet(const C& z) const
    {
        Jet j{detail::iterate_jet<kJetOrder>(z, c_, n_)};
        j.a[0] -= z;
        j.a[1] -= C(1);
        return j;
    }

    // Number of roots of the truncated jet in |h| < tau, via the dominant
    // term; 0 when the constant term dominates (no root nearby).
    static int dominant_order(const Jet& j, const Real& tau)
    {
        std::array<Real, kJetOrder + 1> mag;
        Real p(1);
        Real total(0);
        for (std::size_t k = 0; k <= kJetOrder; ++k) {
            mag[k] = precision::modulus(j.a[k]) * p;
            total += mag[k];
            p *= tau;
        }
        for (std::size_t k = 0; k <= kJetOrder; ++k)
            if (mag[k] > total - mag[k])
                return static_cast<int>(k);
        return -1;
    }

    std::optional<Root> finish(C z, bool converged) const
    {
        const auto [F, dF] = residual(z);
        const Real scale = Real(1) + precision::modulus(z);
        const bool suspicious = !converged || precision::modulus(dF) < Real(1e-2);
        if (!suspicious)
            return polish(z, 1);

        const Real tau = Real(1e-6) * scale;
        int m = dominant_order(jet(z), tau);
        if (m <= 0) {
            if (!converged)
                return multiple_root_search(z);
            m = 1;
        }
        Real last(0);
        if (!refine_multiple(z, m, last))
            return std::nullopt;
        const int m_final = dominant_order(jet(z), tau);
        if (m_final <= 0)
            return multiple_root_search(z);
        if (m_final == 1)
            return polish(z, 1);
        if (auto simple = split_cluster(z, m_final))
            return simple;
        return Root{z, m_final, precision::to_double(last)};
    }

    // A cluster of m simple roots wider than roundoff passes the jet test
    // too. Plain Newton from each root of the degree-m jet polynomial
    // converges quadratically to distinct roots only in that case; the
    // nearest is returned.
    std::optional<Root> split_cluster(const C& z, int m) const
    {
        const Jet j = jet(z);
        const auto mi = static_cast<std::size_t>(m);
        if (j.a[mi] == C(0))
            return std::nullopt;
        std::vector<C> coef(mi + 1);
        for (std::size_t k = 0; k <= mi; ++k)
            coef[k] = j.a[k] / j.a[mi];
        const double r = std::pow(std::max(precision::to_double(precision::modulus(coef[0])), 1e-300), 1.0 / m);
        // Durand-Kerner on the monic jet polynomial.
        std::vector<C> h(mi);
        const cplx seed(0.4, 0.9);
        cplx w = r;
        for (auto& x : h) {
            x = precision::from_cplx<Real>(w);
            w *= seed;
        }
        for (int it = 0; it < 100; ++it) {
            for (std::size_t i = 0; i < mi; ++i) {
                C p = coef[mi];
                for (std::size_t k = mi; k-- > 0;)
                    p = p * h[i] + coef[k];
                C q(1);
                for (std::size_t k = 0; k < mi; ++k)
                    if (k != i)
                        q *= h[i] - h[k];
                if (q == C(0))
                    return std::nullopt;
                h[i] -= p / q;
            }
        }
        std::vector<Root> roots;
        const double radius = cfg_.dedup_tol * (1.0 + precision::to_double(precision::modulus(z)));
        for (const auto& x : h) {
            auto root = polish(z + x, 1);
            if (!root)
                return std::nullopt;
            for (const auto& other : roots)
                if (precision::to_double(precision::modulus(other.z - root->z)) <= radius)
                    return std::nullopt;
            roots.push_back(*root);
        }
        return *std::min_element(roots.begin(), roots.end(), [&](const Root& a, const Root& b) {
            return precision::modulus(a.z - z) < precision::modulus(b.z - z);
        });
    }

    // Newton on the (m-1)-th jet coefficient converges quadratically to an
    // m-fold root.
    bool refine_multiple(C& z, int m, Real& last) const
    {
        const Real scale = Real(1) + precision::modulus(z);
        const Real tol(cfg_.newton_tol);
        for (int it = 0; it < 60; ++it) {
            const Jet j = jet(z);
            if (j.a[static_cast<std::size_t>(m)] == C(0))
                break;
            const C step = j.a[static_cast<std::size_t>(m) - 1] /
                           (C(Real(m)) * j.a[static_cast<std::size_t>(m)]);
            z -= step;
            last = precision::modulus(step);
            if (!precision::finite(z))
                return false;
            if (last <= tol * scale * Real(1e-3))
                break;
        }
        return true;
    }

    // Slow Newton stopped too far from a multiple root for the fixed-radius
    // test. Decide in the next wider format, where the Rouche radius can
    // shrink far below any root spacing binary64 resolves.
    std::optional<Root> multiple_root_search(const C& start) const
    {
        using H = precision::higher_t<Real>;
        const Enumerator<H> hi(QuadraticMap(precision::to_cplx(c_)), n_, cfg_);
        const auto found = hi.multiple_root_near(precision::convert<H>(start));
        if (!found)
            return std::nullopt;
        return Root{precision::convert<Real>(found->first), found->second, 0.0};
    }

public:
    // Tries each order m, refines on the (m-1)-th jet coefficient and
    // accepts the first m whose term dominates at a radius where that term
    // still exceeds roundoff by about 1e8. F itself must vanish to roundoff
    // and the top jet terms must be negligible, since the truncated tail is
    // not part of the dominance test.
    std::optional<std::pair<C, int>> multiple_root_near(const C& start) const
    {
        using std::pow;
        const double eps = precision::to_double(precision::epsilon<Real>());
        for (int m = 2; m + 2 <= static_cast<int>(kJetOrder); ++m) {
            C z = start;
            Real last(0);
            if (!refine_multiple(z, m, last))
                continue;
            const Real scale = Real(1) + precision::modulus(z);
            if (precision::modulus(z - start) > Real(1e-1) * scale)
                continue;
            const double t = std::pow(10.0, (std::log10(eps) + 8.0) / m);
            const Jet j = jet(z);
            if (precision::modulus(j.a[0]) > Real(std::pow(eps, 0.6)) * scale)
                continue;
            const Real tau = Real(t) * scale;
            const Real head = precision::modulus(j.a[static_cast<std::size_t>(m)]) * pow(tau, m);
            const Real tail = precision::modulus(j.a[kJetOrder]) * pow(tau, static_cast<int>(kJetOrder));
            if (dominant_order(j, tau) == m && tail < Real(1e-3) * head)
                return std::pair<C, int>{z, m};
        }
        return std::nullopt;
    }

private:
    std::optional<Root> polish(C z, int multiplicity) const
    {
        double last = 0.0;
        for (int it = 0; it < 3; ++it) {
            const auto [F, dF] = residual(z);
            if (!precision::finite(F) || !precision::finite(dF))
                return std::nullopt;
            if (F == C(0) || dF == C(0)) {
                last = 0.0;
                break;
            }
            const C step = F / dF;
            z -= step;
            last = precision::to_double(precision::modulus(step));
            if (last == 0.0)
                break;
        }
        if (!precision::finite(z))
            return std::nullopt;
        if (last > cfg_.newton_tol * (1.0 + precision::to_double(precision::modulus(z))))
            return std::nullopt;
        // Quadratic model a_1 h + a_2 h^2 puts the nearest other root near
        // |a_1/a_2|; a quarter of that is a conservative isolation radius.
        const auto j = detail::iterate_jet<2>(z, c_, n_);
        const Real a1 = precision::modulus(j[1] - C(1));
        const Real a2 = precision::modulus(j[2]);
        Root r{z, multiplicity, last};
        if (a2 > Real(0))
            r.isolation = precision::to_double(Real(0.25) * a1 / a2);
        return r;
    }

    C c_;
    int n_;
    const PrecisionConfig& cfg_;
    Real bound_;
    int newton_iter_;
};

// Keeps distinct roots; a candidate within dedup_tol (relative) of a kept
// root is merged into it.
template <class Real>
class RootSet {
public:
    using Root = typename Enumerator<Real>::Root;

    explicit RootSet(double dedup_tol) : tol_(dedup_tol) {}

    // Returns true if the root was new.
    bool insert(const Root& r)
    {
        const cplx z = precision::to_cplx(r.z);
        const double radius = tol_ * (1.0 + std::abs(z));
        auto lo = std::lower_bound(keys_.begin(), keys_.end(), z.real() - radius,
                                   [](const Key& k, double v) { return k.re < v; });
        for (auto it = lo; it != keys_.end() && it->re <= z.real() + radius; ++it) {
            Root& kept = roots_[it->index];
            const double d = std::abs(precision::to_cplx(kept.z) - z);
            if (d <= radius && d < std::min(kept.isolation, r.isolation)) {
                if (r.multiplicity > kept.multiplicity) {
                    total_ += r.multiplicity - kept.multiplicity;
                    kept.multiplicity = r.multiplicity;
                }
                if (r.residual < kept.residual) {
                    kept.z = r.z;
                    kept.residual = r.residual;
                }
                return false;
            }
        }
        keys_.insert(std::upper_bound(keys_.begin(), keys_.end(), z.real(),
                                      [](double v, const Key& k) { return v < k.re; }),
                     Key{z.real(), roots_.size()});
        roots_.push_back(r);
        total_ += r.multiplicity;
        return true;
    }

    long long total() const noexcept { return total_; }
    const std::vector<Root>& roots() const noexcept { return roots_; }

private:
    struct Key {
        double re;
        std::size_t index;
    };
    double tol_;
    std::vector<Key> keys_;
    std::vector<Root> roots_;
    long long total_ = 0;
};

std::vector<PeriodicPoint> to_points(const auto& roots, int n)
{
    std::vector<PeriodicPoint> out;
    out.reserve(roots.size());
    for (const auto& r : roots)
        out.push_back({precision::to_cplx(r.z), n, 0, r.residual, r.multiplicity});
    std::sort(out.begin(), out.end(), [](const PeriodicPoint& a, const PeriodicPoint& b) {
        if (a.z.real() != b.z.real())
            return a.z.real() < b.z.real();
        return a.z.imag() < b.z.imag();
    });
    return out;
}

// Index of the root matching f(z_i) for each i. Throws on ambiguity.
std::vector<std::size_t> image_indices(std::span<const PeriodicPoint> points, const QuadraticMap& map)
{
    double extent = 0.0;
    for (const auto& p : points)
        extent = std::max(extent, std::abs(p.z));
    const double h = 4e-6 * (1.0 + extent);
    auto key = [h](cplx z) {
        const auto ix = static_cast<std::int64_t>(std::floor(z.real() / h));
        const auto iy = static_cast<std::int64_t>(std::floor(z.imag() / h));
        return std::pair{ix, iy};
    };
    struct PairHash {
        std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& k) const noexcept
        {
            return std::hash<std::int64_t>{}(k.first * 0x9E3779B97F4A7C15LL ^ k.second);
        }
    };
    std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>, PairHash> grid;
    grid.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        grid[key(points[i].z)].push_back(i);

    std::vector<std::size_t> next(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const cplx w = points[i].z * points[i].z + map.c();
        const auto [kx, ky] = key(w);
        double d1 = std::numeric_limits<double>::infinity();
        double d2 = d1;
        std::size_t best = points.size();
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                const auto it = grid.find({kx + dx, ky + dy});
                if (it == grid.end())
                    continue;
                for (std::size_t j : it->second) {
                    const double d = std::abs(points[j].z - w);
                    if (d < d1) {
                        d2 = d1;
                        d1 = d;
                        best = j;
                    } else if (d < d2) {
                        d2 = d;
                    }
                }
            }
        }
        if (best == points.size() || d1 > 1e-6 * (1.0 + std::abs(w)))
            throw DomainError("group_into_orbits: image of a periodic point matches no root; raise mantissa_bits");
        if (d2 <= 4.0 * d1)
            throw DomainError("group_into_orbits: image of a periodic point matches two roots; raise mantissa_bits");
        next[i] = best;
    }
    std::vector<int> indegree(points.size(), 0);
    for (std::size_t j : next)
        if (++indegree[j] > 1)
            throw DomainError("group_into_orbits: f is not a permutation of the roots; raise mantissa_bits");
    return next;
}

bool lex_less(cplx a, cplx b)
{
    if (a.real() != b.real())
        return a.real() < b.real();
    return a.imag() < b.imag();
}

template <class Real>
std::vector<PeriodicPoint> enumerate(const QuadraticMap& map, int n, const PrecisionConfig& cfg,
                                     std::map<int, std::vector<PeriodicPoint>>& memo)
{
    using E = Enumerator<Real>;
    using C = typename E::C;
    const E solver(map, n, cfg);
    const long long expected = 1LL << n;

    std::vector<C> seeds;
    for (int d = 1; d < n; ++d) {
        if (n % d != 0)
            continue;
        if (!memo.contains(d))
            memo.emplace(d, enumerate<Real>(map, d, cfg, memo));
        for (const auto& p : memo.at(d))
            seeds.push_back(precision::from_cplx<Real>(p.z));
    }
    for (auto& s : solver.critical_orbit_seeds())
        seeds.push_back(s);
    // Trees over both fixed points: either one can run through the critical
    // point (beta for c=-2, alpha for c=0), which collapses half its leaves.
    const auto ab = alpha_beta_fixed_points(map);
    for (const cplx base : {ab.beta, ab.alpha})
        for (auto& s : solver.pullback_seeds(precision::from_cplx<Real>(base)))
            seeds.push_back(std::move(s));

    std::vector<std::optional<typename E::Root>> results(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) { results[i] = solver.solve(seeds[i]); });

    RootSet<Real> set(cfg.dedup_tol);
    std::vector<std::size_t> unused;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i] || !set.insert(*results[i]))
            unused.push_back(i);
    }

    // The root set is closed under f, so each root has a preimage among the
    // roots. Both preimages of known roots seed roots the trees missed,
    // typically those hugging the critical point.
    for (int round = 0; round < kPullbackRounds && set.total() < expected; ++round) {
        std::vector<C> pre;
        for (const auto& r : set.roots()) {
            const C w = precision::principal_sqrt(r.z - C(precision::from_cplx<Real>(map.c())));
            pre.push_back(w);
            pre.push_back(C(-w));
        }
        std::vector<std::optional<typename E::Root>> found(pre.size());
        parallel_for(pre.size(), [&](std::size_t i) { found[i] = solver.solve(pre[i]); });
        const long long before = set.total();
        // Multiple roots come from the seeded pass; slow Newton inside a dense
        // cluster would otherwise be misread as one.
        for (const auto& r : found)
            if (r && r->multiplicity == 1)
                set.insert(*r);
        if (set.total() == before)
            break;
    }

    // Deflated Newton from seeds that produced nothing new.
    if (set.total() < expected) {
        // Unused seeds usually sit on a root already found; nudge them off it.
        std::vector<C> starts;
        for (std::size_t k = 0; k < unused.size(); ++k) {
            const cplx s = precision::to_cplx(seeds[unused[k]]);
            const double angle = kTwoPi * (0.618033988749894848 * static_cast<double>(k));
            starts.push_back(precision::from_cplx<Real>(s + std::polar(1e-3 * (1.0 + std::abs(s)), angle)));
        }
        const double radius = 1.1 * std::max(2.0, std::abs(alpha_beta_fixed_points(map).beta));
        const long long missing = expected - set.total();
        for (long long k = 0; k < 2 * missing + 16; ++k) {
            const double angle = kTwoPi * (0.618033988749894848 * static_cast<double>(k));
            starts.push_back(precision::from_cplx<Real>(std::polar(radius, angle)));
        }
        const std::size_t budget = static_cast<std::size_t>(8 * missing + 64);
        for (std::size_t k = 0; k < starts.size() && k < budget && set.total() < expected; ++k) {
            auto r = solver.solve(starts[k], set.roots());
            if (r)
                set.insert(*r);
        }
    }

    auto points = to_points(set.roots(), n);
    if (set.total() != expected)
        throw IncompleteEnumeration("fixed_points_of_iterate: found " + std::to_string(set.total()) +
                                        " roots of f^" + std::to_string(n) + "(z)=z with multiplicity, expected " +
                                        std::to_string(expected),
                                    std::move(points), expected);

    const auto next = image_indices(points, map);
    std::vector<int> period(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (period[i])
            continue;
        std::vector<std::size_t> cycle{i};
        for (std::size_t j = next[i]; j != i; j = next[j])
            cycle.push_back(j);
        for (std::size_t j : cycle)
            period[j] = static_cast<int>(cycle.size());
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (n % period[i] != 0)
            throw DomainError("fixed_points_of_iterate: cycle length does not divide n; raise mantissa_bits");
        points[i].minimal_period = period[i];
    }
    return points;
}

} // namespace

std::vector<PeriodicPoint> fixed_points_of_iterate(const QuadraticMap& map, int n, const PrecisionConfig& cfg)
{
    cfg.validate();
    if (n < 1)
        throw DomainError("fixed_points_of_iterate: n must be at least 1");
    if (n > enumeration_cap(cfg))
        throw DomainError("fixed_points_of_iterate: n=" + std::to_string(n) + " exceeds the cap of " +
                          std::to_string(enumeration_cap(cfg)) + " at mantissa_bits=" +
                          std::to_string(cfg.mantissa_bits));
    return precision::dispatch(cfg.mantissa_bits, [&]<class Real>(std::type_identity<Real>) {
        std::map<int, std::vector<PeriodicPoint>> memo;
        return enumerate<Real>(map, n, cfg, memo);
    });
}

Stability classify_orbit(const PeriodicOrbit& orbit, double tol_class)
{
    const double mod = std::abs(orbit.multiplier);
    if (mod > 1.0 + tol_class)
        return Stability::repelling;
    if (mod < 1.0 - tol_class)
        return Stability::attracting;
    const double turns = std::arg(orbit.multiplier) / kTwoPi;
    for (int q = 1; q <= 64; ++q) {
        const double k = std::round(turns * q);
        if (std::abs(orbit.multiplier - std::polar(1.0, kTwoPi * k / q)) < tol_class)
            return Stability::parabolic_candidate;
    }
    return Stability::indifferent_candidate;
}

std::vector<PeriodicOrbit> group_into_orbits(std::span<const PeriodicPoint> points, const QuadraticMap& map,
                                             int n, const PrecisionConfig& cfg, double tol_class)
{
    cfg.validate();
    const auto next = image_indices(points, map);
    std::vector<bool> seen(points.size(), false);
    std::vector<PeriodicOrbit> orbits;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (seen[i])
            continue;
        std::vector<std::size_t> cycle{i};
        seen[i] = true;
        for (std::size_t j = next[i]; j != i; j = next[j]) {
            cycle.push_back(j);
            seen[j] = true;
        }
        if (n % static_cast<int>(cycle.size()) != 0)
            throw DomainError("group_into_orbits: cycle length " + std::to_string(cycle.size()) +
                              " does not divide n=" + std::to_string(n));
        // Start the cycle at its lexicographically smallest point.
        const auto start = static_cast<std::size_t>(
            std::min_element(cycle.begin(), cycle.end(),
                             [&](std::size_t a, std::size_t b) { return lex_less(points[a].z, points[b].z); }) -
            cycle.begin());
        std::rotate(cycle.begin(), cycle.begin() + static_cast<std::ptrdiff_t>(start), cycle.end());

        PeriodicOrbit o;
        o.minimal_period = static_cast<int>(cycle.size());
        o.multiplicity = points[i].multiplicity;
        cplx lambda = 1.0;
        for (std::size_t j : cycle) {
            o.points.push_back(points[j].z);
            lambda *= 2.0 * points[j].z;
        }
        o.multiplier = lambda;
        for (const cplx z : o.points)
            o.multiplier_spread =
                std::max(o.multiplier_spread, std::abs(derivative_along_orbit(map, z, o.minimal_period) - lambda));
        o.stability = classify_orbit(o, tol_class);
        orbits.push_back(std::move(o));
    }
    std::sort(orbits.begin(), orbits.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
        if (a.minimal_period != b.minimal_period)
            return a.minimal_period < b.minimal_period;
        return lex_less(a.points.front(), b.points.front());
    });
    return orbits;
}

OrbitCatalog::OrbitCatalog(QuadraticMap map, PrecisionConfig cfg, double tol_class)
    : map_(map), cfg_(cfg), tol_class_(tol_class)
{
    cfg_.validate();
}

const std::vector<PeriodicPoint>& OrbitCatalog::points(int n)
{
    {
        std::lock_guard lock(mutex_);
        if (auto it = points_.find(n); it != points_.end())
            return *it->second;
    }
    auto computed = std::make_shared<const std::vector<PeriodicPoint>>(fixed_points_of_iterate(map_, n, cfg_));
    std::lock_guard lock(mutex_);
    return *points_.try_emplace(n, std::move(computed)).first->second;
}

const std::vector<PeriodicOrbit>& OrbitCatalog::orbits(int n)
{
    {
        std::lock_guard lock(mutex_);
        if (auto it = orbits_.find(n); it != orbits_.end())
            return *it->second;
    }
    const auto& pts = points(n);
    auto computed =
        std::make_shared<const std::vector<PeriodicOrbit>>(group_into_orbits(pts, map_, n, cfg_, tol_class_));
    std::lock_guard lock(mutex_);
    return *orbits_.try_emplace(n, std::move(computed)).first->second;
}

std::vector<PeriodicOrbit> OrbitCatalog::orbits_of_minimal_period(int n)
{
    std::vector<PeriodicOrbit> out;
    for (const auto& o : orbits(n))
        if (o.minimal_period == n)
            out.push_back(o);
    return out;
}

} // namespace quadray
