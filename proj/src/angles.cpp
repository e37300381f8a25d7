#include "quadray/angles.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

namespace quadray {

namespace {

BigInt normalize_numerator(const BigInt& num, const BigInt& den)
{
    BigInt r = num % den;
    if (r < 0)
        r += den;
    return r;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

BigInt parse_integer(std::string_view s)
{
    s = trim(s);
    if (s.empty())
        throw DomainError("angle: empty integer field");
    std::size_t start = (s.front() == '-' || s.front() == '+') ? 1 : 0;
    if (start == s.size())
        throw DomainError("angle: malformed integer '" + std::string(s) + "'");
    for (std::size_t i = start; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i])))
            throw DomainError("angle: malformed integer '" + std::string(s) + "'");
    return BigInt(std::string(s));
}

// Multiplicative order of 2 modulo an odd modulus m > 1.
std::optional<std::uint64_t> order_of_two(const BigInt& m)
{
    if (m <= 1)
        return 1;
    if (boost::multiprecision::msb(m) < 62) {
        const auto mod = static_cast<unsigned __int128>(m.convert_to<std::uint64_t>());
        unsigned __int128 x = 2 % mod;
        std::uint64_t k = 1;
        while (x != 1) {
            x = (x * 2) % mod;
            if (++k > kAnglePeriodCap)
                return std::nullopt;
        }
        return k;
    }
    BigInt x = BigInt(2) % m;
    std::uint64_t k = 1;
    while (x != 1) {
        x = (x * 2) % m;
        if (++k > kAnglePeriodCap)
            return std::nullopt;
    }
    return k;
}

std::vector<Angle> sorted_copy(std::span<const Angle> s)
{
    std::vector<Angle> v(s.begin(), s.end());
    std::sort(v.begin(), v.end());
    return v;
}
} // namespace

Angle::Angle(BigInt numerator, BigInt denominator)
{
    if (denominator < 1)
        throw DomainError("angle: denominator must be positive");
    BigInt num = normalize_numerator(numerator, denominator);
    BigInt g = boost::multiprecision::gcd(num, denominator);
    if (g == 0)
        g = 1;
    num_ = num / g;
    den_ = denominator / g;
    if (num_ == 0)
        den_ = 1;
}

Angle Angle::parse(std::string_view text)
{
    text = trim(text);
    const auto slash = text.find('/');
    if (slash == std::string_view::npos)
        return Angle(parse_integer(text), BigInt(1));
    return Angle(parse_integer(text.substr(0, slash)), parse_integer(text.substr(slash + 1)));
}

std::string Angle::to_string() const
{
    return num_.str() + "/" + den_.str();
}

double Angle::turns() const
{
    const auto bits = boost::multiprecision::msb(den_);
    if (bits < 1000)
        return static_cast<double>(num_) / static_cast<double>(den_);
    const auto shift = bits - 60;
    return static_cast<double>(BigInt(num_ >> shift)) / static_cast<double>(BigInt(den_ >> shift));
}

std::strong_ordering operator<=>(const Angle& a, const Angle& b)
{
    const BigInt lhs = a.num_ * b.den_;
    const BigInt rhs = b.num_ * a.den_;
    if (lhs < rhs)
        return std::strong_ordering::less;
    if (lhs > rhs)
        return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

Angle doubled(const Angle& a)
{
    return Angle(a.numerator() * 2, a.denominator());
}

Angle doubled(const Angle& a, std::uint64_t k)
{
    if (a.denominator() == 1)
        return a;
    const BigInt factor = boost::multiprecision::powm(BigInt(2), BigInt(k), a.denominator());
    return Angle(a.numerator() * factor, a.denominator());
}

std::optional<std::uint64_t> angle_period(const Angle& a)
{
    if (a.denominator() % 2 == 0)
        return std::nullopt;
    auto order = order_of_two(a.denominator());
    if (!order)
        throw DomainError("angle_period: period of " + a.to_string() + " exceeds the search cap");
    return order;
}

AngleOrbitType angle_orbit_type(const Angle& a)
{
    AngleOrbitType t;
    BigInt q = a.denominator();
    if (q > 1) {
        t.preperiod = boost::multiprecision::lsb(q);
        q >>= static_cast<unsigned>(t.preperiod);
    }
    auto order = order_of_two(q);
    if (!order)
        throw DomainError("angle_orbit_type: period of " + a.to_string() + " exceeds the search cap");
    t.period = *order;
    return t;
}

std::vector<Angle> periodic_angles(int n, int cap)
{
    if (n < 1)
        throw DomainError("periodic_angles: n must be at least 1");
    if (n > cap)
        throw DomainError("periodic_angles: n=" + std::to_string(n) + " exceeds cap " + std::to_string(cap));
    const BigInt den = (BigInt(1) << n) - 1;
    const auto count = (std::uint64_t{1} << n) - 1;
    std::vector<Angle> out;
    out.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k)
        out.emplace_back(BigInt(k), den);
    return out;
}

std::vector<Angle> angles_of_exact_period(int n, int cap)
{
    auto all = periodic_angles(n, cap);
    std::vector<Angle> out;
    for (auto& a : all)
        if (angle_period(a) == static_cast<std::uint64_t>(n))
            out.push_back(std::move(a));
    return out;
}

bool cyclic_order_preserved(std::span<const Angle> domain, std::span<const Angle> images)
{
    if (domain.size() != images.size())
        throw DomainError("cyclic_order_preserved: domain and image sizes differ");
    const std::size_t m = domain.size();
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return domain[a] < domain[b]; });

    std::set<Angle> distinct(images.begin(), images.end());
    if (distinct.size() != m)
        return false;
    if (m <= 2)
        return true;

    // Images of a cyclically ordered set are cyclically ordered iff the image
    // sequence has exactly one cyclic descent.
    std::size_t descents = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const Angle& here = images[idx[i]];
        const Angle& next = images[idx[(i + 1) % m]];
        if (next < here)
            ++descents;
    }
    return descents == 1;
}

bool unlinked(std::span<const Angle> a, std::span<const Angle> b)
{
    const auto sa = sorted_copy(a);
    for (const auto& x : b)
        if (std::binary_search(sa.begin(), sa.end(), x))
            throw DomainError("unlinked: sets are not disjoint (share " + x.to_string() + ")");
    if (sa.size() <= 1 || b.empty())
        return true;
    std::optional<std::size_t> arc;
    for (const auto& x : b) {
        const auto k = static_cast<std::size_t>(std::upper_bound(sa.begin(), sa.end(), x) - sa.begin()) % sa.size();
        if (!arc)
            arc = k;
        else if (*arc != k)
            return false;
    }
    return true;
}

PortraitValidation validate_formal_portrait(const OrbitPortrait& portrait)
{
    PortraitValidation v;
    const std::size_t p = portrait.sets.size();

    v.finite_nonempty = p >= 1;
    if (p == 0)
        v.violations.emplace_back("(1) portrait has no sets");
    for (std::size_t i = 0; i < p; ++i) {
        const auto& s = portrait.sets[i];
        if (s.empty()) {
            v.finite_nonempty = false;
            v.violations.push_back("(1) A_" + std::to_string(i + 1) + " is empty");
        }
        if (std::set<Angle>(s.begin(), s.end()).size() != s.size()) {
            v.finite_nonempty = false;
            v.violations.push_back("(1) A_" + std::to_string(i + 1) + " repeats an angle");
        }
    }

    v.doubling_preserves_order = p >= 1;
    for (std::size_t i = 0; i < p; ++i) {
        const auto& src = portrait.sets[i];
        const auto& dst = portrait.sets[(i + 1) % p];
        std::vector<Angle> img;
        img.reserve(src.size());
        for (const auto& a : src)
            img.push_back(doubled(a));
        const std::set<Angle> img_set(img.begin(), img.end());
        const std::set<Angle> dst_set(dst.begin(), dst.end());
        const std::string tag = "(2) A_" + std::to_string(i + 1) + " -> A_" + std::to_string((i + 1) % p + 1);
        if (img_set.size() != img.size() || img_set != dst_set) {
            v.doubling_preserves_order = false;
            v.violations.push_back(tag + ": doubling is not a bijection");
        } else if (!cyclic_order_preserved(src, img)) {
            v.doubling_preserves_order = false;
            v.violations.push_back(tag + ": cyclic order not preserved");
        }
    }

    v.common_period = p >= 1;
    std::optional<std::uint64_t> common;
    for (std::size_t i = 0; i < p && v.common_period; ++i) {
        for (const auto& a : portrait.sets[i]) {
            const auto period = angle_period(a);
            if (!period) {
                v.common_period = false;
                v.violations.push_back("(3) " + a.to_string() + " is not periodic under doubling");
                break;
            }
            if (!common)
                common = period;
            else if (*common != *period) {
                v.common_period = false;
                v.violations.push_back("(3) periods " + std::to_string(*common) + " and " +
                                       std::to_string(*period) + " differ");
                break;
            }
        }
    }
    if (v.common_period && common && *common % p != 0) {
        v.common_period = false;
        v.violations.push_back("(3) common period " + std::to_string(*common) + " is not a multiple of p=" +
                               std::to_string(p));
    }
    if (v.common_period)
        v.ray_period = common;

    v.pairwise_unlinked = true;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t k = i + 1; k < p; ++k) {
            const std::string tag = "(4) A_" + std::to_string(i + 1) + ", A_" + std::to_string(k + 1);
            try {
                if (!unlinked(portrait.sets[i], portrait.sets[k])) {
                    v.pairwise_unlinked = false;
                    v.violations.push_back(tag + " are linked");
                }
            } catch (const DomainError&) {
                v.pairwise_unlinked = false;
                v.violations.push_back(tag + " intersect");
            }
        }
    }
    return v;
}

std::string to_string(PortraitKind kind)
{
    switch (kind) {
    case PortraitKind::primitive:
        return "primitive";
    case PortraitKind::satellite:
        return "satellite";
    case PortraitKind::invalid:
        break;
    }
    return "invalid";
}

PortraitClassification classify_portrait(const OrbitPortrait& portrait)
{
    const auto v = validate_formal_portrait(portrait);
    if (!v.valid())
        throw DomainError("classify_portrait: portrait fails validation: " + v.violations.front());

    PortraitClassification cls;
    const std::uint64_t p = portrait.sets.size();
    cls.valence = portrait.sets.front().size();
    cls.ray_period = *v.ray_period;
    cls.rays_per_cycle = cls.ray_period / p;
    if (cls.valence % cls.rays_per_cycle != 0) {
        cls.kind = PortraitKind::invalid;
        return cls;
    }
    cls.ray_cycles = cls.valence / cls.rays_per_cycle;
    if (cls.rays_per_cycle == 1)
        cls.kind = cls.valence <= 2 ? PortraitKind::primitive : PortraitKind::invalid;
    else
        cls.kind = cls.valence == cls.rays_per_cycle ? PortraitKind::satellite : PortraitKind::invalid;
    return cls;
}

namespace {

// Shortest gap between cyclically consecutive members, as an exact angle
// (a single point leaves the full turn, represented by 1/1 -> we use a flag).
struct ArcKey {
    bool full_turn = true;
    Angle length;
    Angle start;
};

ArcKey shortest_arc(const std::vector<Angle>& set)
{
    ArcKey key;
    if (set.size() < 2) {
        if (!set.empty())
            key.start = set.front();
        return key;
    }
    auto s = set;
    std::sort(s.begin(), s.end());
    key.full_turn = false;
    bool first = true;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Angle& a = s[i];
        const Angle& b = s[(i + 1) % s.size()];
        // (b - a) mod 1; Angle's constructor reduces mod 1.
        const Angle gap(b.numerator() * a.denominator() - a.numerator() * b.denominator(),
                        a.denominator() * b.denominator());
        if (first || gap < key.length || (gap == key.length && a < key.start)) {
            key.length = gap;
            key.start = a;
            first = false;
        }
    }
    return key;
}

bool arc_less(const ArcKey& x, const ArcKey& y)
{
    if (x.full_turn != y.full_turn)
        return !x.full_turn;
    if (!x.full_turn && x.length != y.length)
        return x.length < y.length;
    return x.start < y.start;
}

} // namespace

OrbitPortrait normalize_portrait(const OrbitPortrait& portrait)
{
    const std::size_t p = portrait.sets.size();
    if (p == 0)
        return portrait;
    std::size_t best = 0;
    ArcKey best_key = shortest_arc(portrait.sets[0]);
    for (std::size_t i = 1; i < p; ++i) {
        const ArcKey key = shortest_arc(portrait.sets[i]);
        if (arc_less(key, best_key)) {
            best = i;
            best_key = key;
        }
    }

    OrbitPortrait out;
    out.ray_period = portrait.ray_period;
    out.sets.reserve(p);
    for (std::size_t k = 0; k < p; ++k) {
        const auto& src = portrait.sets[(best + k) % p];
        if (k == 0) {
            auto first = src;
            std::sort(first.begin(), first.end());
            out.sets.push_back(std::move(first));
            continue;
        }
        // Order as the image sequence of the previous set when doubling maps
        // it onto this one; otherwise fall back to ascending order.
        std::vector<Angle> img;
        for (const auto& a : out.sets.back())
            img.push_back(doubled(a));
        const std::set<Angle> img_set(img.begin(), img.end());
        const std::set<Angle> src_set(src.begin(), src.end());
        if (img_set == src_set && img.size() == src.size()) {
            out.sets.push_back(std::move(img));
        } else {
            auto sorted = src;
            std::sort(sorted.begin(), sorted.end());
            out.sets.push_back(std::move(sorted));
        }
    }
    return out;
}

nlohmann::json portrait_to_json(const OrbitPortrait& portrait)
{
    nlohmann::json sets = nlohmann::json::array();
    for (const auto& s : portrait.sets) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& a : s)
            arr.push_back(a.to_string());
        sets.push_back(std::move(arr));
    }
    return nlohmann::json{{"p", portrait.sets.size()}, {"sets", std::move(sets)}};
}

OrbitPortrait portrait_from_json(const nlohmann::json& doc)
{
    if (!doc.is_object())
        throw DomainError("portrait JSON: expected an object");
    for (const auto& [key, _] : doc.items())
        if (key != "p" && key != "sets" && key != "schema")
            throw DomainError("portrait JSON: unknown key '" + key + "'");
    if (!doc.contains("p") || !doc["p"].is_number_integer())
        throw DomainError("portrait JSON: 'p' must be an integer");
    if (!doc.contains("sets") || !doc["sets"].is_array())
        throw DomainError("portrait JSON: 'sets' must be an array");
    const auto p = doc["p"].get<long long>();
    if (p < 1 || static_cast<std::size_t>(p) != doc["sets"].size())
        throw DomainError("portrait JSON: 'p' does not match the number of sets");
    OrbitPortrait out;
    for (const auto& s : doc["sets"]) {
        if (!s.is_array())
            throw DomainError("portrait JSON: each set must be an array");
        std::vector<Angle> set;
        for (const auto& a : s) {
            if (!a.is_string())
                throw DomainError("portrait JSON: angles must be \"num/den\" strings");
            set.push_back(Angle::parse(a.get<std::string>()));
        }
        out.sets.push_back(std::move(set));
    }
    return out;
}

double log_big(const BigInt& x)
{
    if (x <= 0)
        throw DomainError("log_big: argument must be positive");
    const auto bits = boost::multiprecision::msb(x);
    if (bits < 1000)
        return std::log(static_cast<double>(x));
    const auto shift = bits - 60;
    return std::log(static_cast<double>(BigInt(x >> shift))) + static_cast<double>(shift) * kLog2;
}

namespace {

ContinuedFractionReport sums_from_quotients(std::vector<BigInt> quotients, int N, double alpha)
{
    ContinuedFractionReport rep;
    rep.alpha = alpha;
    rep.partial_quotients = std::move(quotients);
    BigInt q_prev2 = 0; // q_{-1}
    BigInt q_prev = 1;  // q_0
    for (int k = 0; k <= N; ++k) {
        const BigInt q = rep.partial_quotients[static_cast<std::size_t>(k)] * q_prev + q_prev2;
        rep.denominators.push_back(q);
        q_prev2 = q_prev;
        q_prev = q;
    }
    for (int k = 0; k < N; ++k) {
        const double log_qn = log_big(rep.denominators[static_cast<std::size_t>(k)]);
        const double log_qn1 = log_big(rep.denominators[static_cast<std::size_t>(k) + 1]);
        const double bryuno = log_qn1 > 0.0 ? std::exp(std::log(log_qn1) - log_qn) : 0.0;
        // log log q_{n+1} is negative or undefined for q_{n+1} <= e; those
        // small initial terms contribute 0.
        const double pm = log_qn1 > 1.0 ? std::exp(std::log(std::log(log_qn1)) - log_qn) : 0.0;
        rep.bryuno_terms.push_back(bryuno);
        rep.perez_marco_terms.push_back(pm);
        rep.bryuno_partial += bryuno;
        rep.perez_marco_partial += pm;
    }
    return rep;
}

template <class Real>
ContinuedFractionReport bryuno_impl(Real alpha, int N, int usable_bits)
{
    using std::floor;
    if (N < 2)
        throw DomainError("bryuno_sums: N must be at least 2");
    Real x = alpha - floor(alpha);
    if (x == 0)
        throw DomainError("bryuno_sums: alpha is rational (integer)");
    std::vector<BigInt> quotients;
    BigInt q_prev2 = 0;
    BigInt q_prev = 1;
    for (int k = 1; k <= N + 1; ++k) {
        x = Real(1) / x;
        const Real a = floor(x);
        x -= a;
        BigInt ak = a.template convert_to<BigInt>();
        const BigInt q = ak * q_prev + q_prev2;
        if (2 * static_cast<int>(boost::multiprecision::msb(q)) > usable_bits)
            throw PrecisionExhausted("bryuno_sums: q_" + std::to_string(k) +
                                     " exceeds the precision of alpha; lower N or supply alpha with more digits");
        quotients.push_back(std::move(ak));
        q_prev2 = q_prev;
        q_prev = q;
        if (x == 0 && k < N + 1)
            throw DomainError("bryuno_sums: alpha is rational (continued fraction terminates at a_" +
                              std::to_string(k) + ")");
    }
    return sums_from_quotients(std::move(quotients), N, static_cast<double>(alpha));
}

} // namespace

ContinuedFractionReport bryuno_sums(const precision::Quad& alpha, int N)
{
    return bryuno_impl(alpha, N, std::numeric_limits<precision::Quad>::digits - 8);
}

ContinuedFractionReport bryuno_sums(double alpha, int N)
{
    if (!std::isfinite(alpha))
        throw DomainError("bryuno_sums: alpha must be finite");
    return bryuno_impl(precision::Quad(alpha), N, std::numeric_limits<double>::digits - 8);
}

ContinuedFractionReport bryuno_sums_from_quotients(std::span<const BigInt> quotients, int N)
{
    if (N < 2)
        throw DomainError("bryuno_sums: N must be at least 2");
    if (quotients.size() < static_cast<std::size_t>(N) + 1)
        throw DomainError("bryuno_sums: need N+1 partial quotients");
    for (const auto& a : quotients.first(static_cast<std::size_t>(N) + 1))
        if (a < 1)
            throw DomainError("bryuno_sums: partial quotients must be positive");
    std::vector<BigInt> a(quotients.begin(), quotients.begin() + N + 1);
    // alpha from the last convergent p/q.
    BigInt p_prev2 = 1, p_prev = 0, q_prev2 = 0, q_prev = 1;
    for (const auto& ak : a) {
        const BigInt p = ak * p_prev + p_prev2;
        const BigInt q = ak * q_prev + q_prev2;
        p_prev2 = p_prev;
        p_prev = p;
        q_prev2 = q_prev;
        q_prev = q;
    }
    const double alpha = p_prev == 0 ? 0.0 : std::exp(log_big(p_prev) - log_big(q_prev));
    return sums_from_quotients(std::move(a), N, alpha);
}

} // namespace quadray
