#include "quadray/scene.hpp"

#include "quadray/core_dynamics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <optional>
#include <random>

namespace quadray {

void Viewport::validate() const
{
    if (!std::isfinite(xmin) || !std::isfinite(xmax) || !std::isfinite(ymin) || !std::isfinite(ymax) ||
        !(xmax > xmin) || !(ymax > ymin))
        throw DomainError("viewport must be finite with xmax > xmin and ymax > ymin");
}

namespace {

// Liang-Barsky clip of segment a-b; nullopt when it misses the viewport.
std::optional<std::pair<cplx, cplx>> clip_segment(const Viewport& v, cplx a, cplx b)
{
    double t0 = 0.0, t1 = 1.0;
    const double dx = b.real() - a.real(), dy = b.imag() - a.imag();
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.real() - v.xmin, v.xmax - a.real(), a.imag() - v.ymin, v.ymax - a.imag()};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0)
                return std::nullopt;
            continue;
        }
        const double t = q[i] / p[i];
        if (p[i] < 0.0)
            t0 = std::max(t0, t);
        else
            t1 = std::min(t1, t);
        if (t0 > t1)
            return std::nullopt;
    }
    auto at = [&](double t) {
        cplx z = a + t * (b - a);
        // Guard against roundoff pushing the clipped end a hair outside.
        return cplx(std::clamp(z.real(), v.xmin, v.xmax), std::clamp(z.imag(), v.ymin, v.ymax));
    };
    return std::pair<cplx, cplx>{at(t0), at(t1)};
}

} // namespace

SceneModel clip_to_viewport(const SceneModel& scene)
{
    scene.viewport.validate();
    const Viewport& v = scene.viewport;
    SceneModel out;
    out.viewport = v;
    out.escape_grid = scene.escape_grid;
    std::copy_if(scene.julia_points.begin(), scene.julia_points.end(), std::back_inserter(out.julia_points),
                 [&](cplx z) { return v.contains(z); });
    for (const auto& ray : scene.rays) {
        RayPolyline piece{ray.angle, {}};
        auto flush = [&] {
            if (piece.points.size() >= 2)
                out.rays.push_back(piece);
            piece.points.clear();
        };
        if (ray.points.size() == 1 && v.contains(ray.points[0]))
            piece.points.push_back(ray.points[0]);
        for (std::size_t i = 1; i < ray.points.size(); ++i) {
            const auto seg = clip_segment(v, ray.points[i - 1], ray.points[i]);
            if (!seg) {
                flush();
                continue;
            }
            if (piece.points.empty() || piece.points.back() != seg->first) {
                flush();
                piece.points.push_back(seg->first);
            }
            piece.points.push_back(seg->second);
            if (seg->second != ray.points[i])
                flush();
        }
        flush();
    }
    std::copy_if(scene.markers.begin(), scene.markers.end(), std::back_inserter(out.markers),
                 [&](const OrbitMarker& m) { return v.contains(m.z); });
    for (const auto& group : scene.bunches) {
        BunchGroup g;
        std::copy_if(group.points.begin(), group.points.end(), std::back_inserter(g.points),
                     [&](cplx z) { return v.contains(z); });
        if (!g.points.empty())
            out.bunches.push_back(std::move(g));
    }
    return out;
}

namespace {

struct Mapper {
    Viewport v;
    double w, h;
    double x(double re) const { return (re - v.xmin) / (v.xmax - v.xmin) * w; }
    double y(double im) const { return (v.ymax - im) / (v.ymax - v.ymin) * h; }
};

std::string escape_xml(const std::string& s)
{
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += ch;
        }
    }
    return out;
}

std::vector<cplx> convex_hull(std::vector<cplx> pts)
{
    std::sort(pts.begin(), pts.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3)
        return pts;
    auto cross = [](cplx o, cplx a, cplx b) {
        return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
    };
    std::vector<cplx> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0)
            --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0.0)
            --k;
        hull[k++] = pts[i - 1];
    }
    hull.resize(k - 1);
    return hull;
}

} // namespace

std::string render_scene(const SceneModel& input, const SceneStyle& style)
{
    const SceneModel scene = clip_to_viewport(input);
    const Viewport& v = scene.viewport;
    const double w = style.width_px;
    const double h = std::max(1.0, std::round(w * (v.ymax - v.ymin) / (v.xmax - v.xmin)));
    const Mapper map{v, w, h};

    std::string svg;
    auto out = std::back_inserter(svg);
    fmt::format_to(out,
                   "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
                   "viewBox=\"0 0 {0:.0f} {1:.0f}\">\n",
                   w, h);
    fmt::format_to(out, "<desc>viewport {:.17g} {:.17g} {:.17g} {:.17g}</desc>\n", v.xmin, v.xmax, v.ymin, v.ymax);
    fmt::format_to(out, "<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", w, h);

    const EscapeGrid& g = scene.escape_grid;
    if (g.width > 0 && g.height > 0 && g.counts.size() == static_cast<std::size_t>(g.width) * g.height) {
        const double cw = w / g.width, ch = h / g.height;
        fmt::format_to(out, "<g id=\"escape\" shape-rendering=\"crispEdges\">\n");
        for (int row = 0; row < g.height; ++row)
            for (int col = 0; col < g.width; ++col) {
                const int cnt = g.counts[static_cast<std::size_t>(row) * g.width + col];
                const int shade = cnt < 0 ? 0 : 255 - static_cast<int>(200.0 * std::sqrt(static_cast<double>(cnt) / std::max(1, g.max_iter)));
                fmt::format_to(out, "<rect x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" fill=\"rgb({},{},{})\"/>\n",
                               col * cw, row * ch, cw, ch, shade, shade, std::min(255, shade + 20));
            }
        fmt::format_to(out, "</g>\n");
    }

    if (!scene.julia_points.empty()) {
        fmt::format_to(out,
                       "<path id=\"julia\" fill=\"none\" stroke=\"black\" stroke-linecap=\"round\" "
                       "stroke-width=\"{:.3f}\" d=\"",
                       2.0 * style.point_radius_px);
        for (cplx z : scene.julia_points)
            fmt::format_to(out, "M{:.2f} {:.2f}h0", map.x(z.real()), map.y(z.imag()));
        fmt::format_to(out, "\"/>\n");
    }

    for (const auto& group : scene.bunches) {
        const auto hull = convex_hull(group.points);
        if (hull.size() >= 3) {
            fmt::format_to(out, "<polygon class=\"bunch\" fill=\"orange\" fill-opacity=\"0.35\" stroke=\"orange\" points=\"");
            for (std::size_t i = 0; i < hull.size(); ++i)
                fmt::format_to(out, "{}{:.3f},{:.3f}", i ? " " : "", map.x(hull[i].real()), map.y(hull[i].imag()));
            fmt::format_to(out, "\"/>\n");
        } else {
            for (cplx z : hull)
                fmt::format_to(out,
                               "<circle class=\"bunch\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"{:.3f}\" fill=\"orange\" "
                               "fill-opacity=\"0.35\"/>\n",
                               map.x(z.real()), map.y(z.imag()), 2.0 * style.marker_radius_px);
            if (hull.size() == 2)
                fmt::format_to(out,
                               "<line class=\"bunch\" x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\" "
                               "stroke=\"orange\" stroke-opacity=\"0.6\" stroke-width=\"{:.3f}\"/>\n",
                               map.x(hull[0].real()), map.y(hull[0].imag()), map.x(hull[1].real()),
                               map.y(hull[1].imag()), 2.0 * style.marker_radius_px);
        }
    }

    for (const auto& ray : scene.rays) {
        const double hue = 360.0 * ray.angle.turns();
        fmt::format_to(out,
                       "<polyline class=\"ray\" data-angle=\"{}\" fill=\"none\" stroke=\"hsl({:.2f},75%,40%)\" "
                       "stroke-width=\"{:.3f}\" points=\"",
                       ray.angle.to_string(), hue, style.ray_width_px);
        for (std::size_t i = 0; i < ray.points.size(); ++i)
            fmt::format_to(out, "{}{:.3f},{:.3f}", i ? " " : "", map.x(ray.points[i].real()),
                           map.y(ray.points[i].imag()));
        fmt::format_to(out, "\"/>\n");
    }

    for (const auto& m : scene.markers) {
        const double x = map.x(m.z.real()), y = map.y(m.z.imag());
        fmt::format_to(out, "<circle class=\"marker\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"{:.3f}\" fill=\"red\"/>\n", x, y,
                       style.marker_radius_px);
        if (!m.label.empty())
            fmt::format_to(out, "<text x=\"{:.3f}\" y=\"{:.3f}\" font-size=\"10\" font-family=\"monospace\">{}</text>\n",
                           x + style.marker_radius_px + 1.0, y - style.marker_radius_px, escape_xml(m.label));
    }
    fmt::format_to(out, "</svg>\n");
    return svg;
}

std::vector<cplx> julia_inverse_iteration(const QuadraticMap& map, std::size_t count, std::uint64_t seed,
                                          std::size_t burn_in)
{
    std::mt19937_64 rng(seed);
    // Start from the repelling fixed point side: beta lies in J.
    cplx z = 0.5 * (1.0 + std::sqrt(cplx(1.0) - 4.0 * map.c()));
    std::vector<cplx> out;
    out.reserve(count);
    std::uint64_t bits = 0;
    int left = 0;
    for (std::size_t i = 0; i < count + burn_in; ++i) {
        if (left == 0) {
            bits = rng();
            left = 64;
        }
        const cplx w = std::sqrt(z - map.c());
        z = (bits & 1u) ? -w : w;
        bits >>= 1;
        --left;
        if (i >= burn_in)
            out.push_back(z);
    }
    return out;
}

EscapeGrid escape_time_grid(const QuadraticMap& map, const Viewport& view, int width, int height, int max_iter)
{
    view.validate();
    if (width < 1 || height < 1 || max_iter < 1)
        throw DomainError("escape_time_grid: width, height and max_iter must be positive");
    EscapeGrid g{width, height, std::vector<int>(static_cast<std::size_t>(width) * height, -1), max_iter};
    const double esc = map.escape_radius();
    for (int row = 0; row < height; ++row)
        for (int col = 0; col < width; ++col) {
            cplx z(view.xmin + (col + 0.5) / width * (view.xmax - view.xmin),
                   view.ymax - (row + 0.5) / height * (view.ymax - view.ymin));
            for (int k = 0; k < max_iter; ++k) {
                if (std::abs(z) > esc) {
                    g.counts[static_cast<std::size_t>(row) * width + col] = k;
                    break;
                }
                z = evaluate(map, z);
            }
        }
    return g;
}

std::string render_line_chart(const std::vector<ChartSeries>& series, const std::string& x_label,
                              const std::string& y_label, const SceneStyle& style)
{
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool first = true;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                continue;
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                first = false;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmax > xmin)) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (!(ymax > ymin)) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double pad_y = 0.05 * (ymax - ymin);
    ymin -= pad_y;
    ymax += pad_y;

    const double w = style.width_px, h = std::round(0.6 * w);
    const double left = 70, right = 20, top = 20, bottom = 50;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (w - left - right); };
    auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * (h - top - bottom); };

    static const char* const colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::string svg;
    auto out = std::back_inserter(svg);
    fmt::format_to(out,
                   "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
                   "viewBox=\"0 0 {0:.0f} {1:.0f}\">\n",
                   w, h);
    fmt::format_to(out, "<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", w, h);
    fmt::format_to(out, "<g font-family=\"monospace\" font-size=\"11\">\n");
    fmt::format_to(out, "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n", left,
                   h - bottom, w - right);
    fmt::format_to(out, "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", left,
                   top, h - bottom);
    for (int i = 0; i <= 4; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 4.0, yv = ymin + (ymax - ymin) * i / 4.0;
        fmt::format_to(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.4g}</text>\n", px(xv),
                       h - bottom + 16, xv);
        fmt::format_to(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.4g}</text>\n", left - 6,
                       py(yv) + 4, yv);
    }
    fmt::format_to(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", (left + w - right) / 2,
                   h - 12, escape_xml(x_label));
    fmt::format_to(out, "<text x=\"14\" y=\"{:.2f}\" transform=\"rotate(-90 14 {:.2f})\" text-anchor=\"middle\">{}</text>\n",
                   (top + h - bottom) / 2, (top + h - bottom) / 2, escape_xml(y_label));
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = colors[k % std::size(colors)];
        fmt::format_to(out, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"", color);
        bool any = false;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                continue;
            fmt::format_to(out, "{}{:.3f},{:.3f}", any ? " " : "", px(s.x[i]), py(s.y[i]));
            any = true;
        }
        fmt::format_to(out, "\"/>\n");
        fmt::format_to(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" fill=\"{}\">{}</text>\n", left + 10,
                       top + 14 + 14.0 * static_cast<double>(k), color, escape_xml(s.name));
    }
    fmt::format_to(out, "</g>\n</svg>\n");
    return svg;
}

} // namespace quadray
