#include "xids/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace xids {

std::string to_string(FigureKind k) {
    switch (k) {
        case FigureKind::bar: return "bar";
        case FigureKind::grouped_bar: return "grouped_bar";
        case FigureKind::heatmap: return "heatmap";
        case FigureKind::distribution: return "distribution";
    }
    return "?";
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

void validate(const FigureSpec& f) {
    if (f.series.empty()) throw InputError("figure '" + f.title + "' has no series");
    const std::size_t n = f.categories.size();
    for (const auto& s : f.series) {
        if (s.values.size() != n)
            throw InputError("figure '" + f.title + "': series '" + s.name + "' has " + std::to_string(s.values.size()) +
                             " values for " + std::to_string(n) + " categories");
        for (double v : s.values)
            if (!std::isfinite(v)) throw InputError("figure '" + f.title + "': non-finite value in series '" + s.name + "'");
    }
    if (f.kind == FigureKind::bar && f.series.size() != 1) throw InputError("bar figure needs exactly one series");
    if (f.kind == FigureKind::distribution) {
        if (f.series.size() != 1) throw InputError("distribution figure needs exactly one series");
        for (double v : f.series[0].values)
            if (v < 0.0) throw InputError("distribution shares must be non-negative");
    }
    if (f.kind == FigureKind::heatmap && f.series.size() != n) throw InputError("heatmap must be square");
}

namespace {

// Shortest text that parses back to the same double.
std::string num(double v) {
    if (v == 0.0) return "0";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string colour(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

// Diverging fill: blue for -1, white for 0, red for +1.
std::string heat(double v) {
    const double t = std::clamp(v, -1.0, 1.0);
    const auto c = [](double x) { return static_cast<int>(std::lround(255.0 * x)); };
    int r = 255, g = 255, b = 255;
    if (t >= 0) {
        g = b = c(1.0 - t);
    } else {
        r = g = c(1.0 + t);
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

struct Canvas {
    std::ostringstream body;
    double width = 0;
    double height = 0;

    std::string finish(const FigureSpec& f) const {
        std::ostringstream os;
        os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width) << "\" height=\""
           << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" data-kind=\""
           << to_string(f.kind) << "\">\n"
           << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height) << "\" fill=\"#ffffff\"/>\n"
           << "<text x=\"" << num(width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           << "font-size=\"15\">" << xml_escape(f.title) << "</text>\n"
           << body.str() << "</svg>\n";
        return os.str();
    }
};

void text(std::ostream& os, double x, double y, const std::string& s, const char* anchor = "middle", double rotate = 0,
          int size = 11) {
    os << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor
       << "\" font-family=\"sans-serif\" font-size=\"" << size << '"';
    if (rotate != 0) os << " transform=\"rotate(" << num(rotate) << ' ' << num(x) << ' ' << num(y) << ")\"";
    os << '>' << xml_escape(s) << "</text>\n";
}

std::string render_bars(const FigureSpec& f) {
    constexpr double left = 70, right = 160, top = 50, bottom = 130, plot_h = 300, bar_w = 14, gap = 12;
    const std::size_t n_cat = f.categories.size();
    const std::size_t n_ser = f.series.size();
    const double slot = bar_w * static_cast<double>(n_ser) + gap;
    const double plot_w = std::max(200.0, slot * static_cast<double>(n_cat));

    double lo = 0.0, hi = 0.0;
    for (const auto& s : f.series)
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (hi == lo) hi = 1.0;
    const double scale = plot_h / (hi - lo);
    const double zero_y = top + hi * scale;

    Canvas c;
    c.width = left + plot_w + right;
    c.height = top + plot_h + bottom;
    auto& os = c.body;

    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        const double y = top + (hi - v) * scale;
        os << "<line x1=\"" << num(left) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left + plot_w) << "\" y2=\""
           << num(y) << "\" stroke=\"#dddddd\"/>\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        text(os, left - 6, y + 4, buf, "end");
    }

    for (std::size_t s = 0; s < n_ser; ++s)
        for (std::size_t k = 0; k < n_cat; ++k) {
            const double v = f.series[s].values[k];
            const double h = std::abs(v) * scale;
            const double x = left + slot * static_cast<double>(k) + gap / 2 + bar_w * static_cast<double>(s);
            const double y = v >= 0 ? zero_y - h : zero_y;
            os << "<rect class=\"bar\" data-series=\"" << xml_escape(f.series[s].name) << "\" data-category=\""
               << xml_escape(f.categories[k]) << "\" data-value=\"" << num(v) << "\" x=\"" << num(x) << "\" y=\""
               << num(y) << "\" width=\"" << num(bar_w) << "\" height=\"" << num(h) << "\" fill=\"" << colour(s)
               << "\"/>\n";
        }
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(zero_y) << "\" x2=\"" << num(left + plot_w) << "\" y2=\""
       << num(zero_y) << "\" stroke=\"#000000\"/>\n";

    for (std::size_t k = 0; k < n_cat; ++k) {
        const double x = left + slot * (static_cast<double>(k) + 0.5);
        text(os, x, top + plot_h + 12, f.categories[k], "end", -45);
    }
    text(os, left + plot_w / 2, c.height - 8, f.x_label);
    text(os, 18, top + plot_h / 2, f.y_label, "middle", -90);

    if (n_ser > 1 || !f.series[0].name.empty())
        for (std::size_t s = 0; s < n_ser; ++s) {
            const double y = top + 16.0 * static_cast<double>(s);
            os << "<rect x=\"" << num(left + plot_w + 16) << "\" y=\"" << num(y) << "\" width=\"10\" height=\"10\" fill=\""
               << colour(s) << "\"/>\n";
            text(os, left + plot_w + 32, y + 9, f.series[s].name, "start");
        }
    return c.finish(f);
}

std::string render_heatmap(const FigureSpec& f) {
    const std::size_t n = f.categories.size();
    const double cell = std::clamp(600.0 / std::max<std::size_t>(n, 1), 4.0, 30.0);
    constexpr double left = 150, top = 50;
    const double grid = cell * static_cast<double>(n);

    Canvas c;
    c.width = left + grid + 30;
    c.height = top + grid + 150;
    auto& os = c.body;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double v = f.series[i].values[j];
            os << "<rect class=\"cell\" data-row=\"" << i << "\" data-col=\"" << j << "\" data-value=\"" << num(v)
               << "\" x=\"" << num(left + cell * static_cast<double>(j)) << "\" y=\""
               << num(top + cell * static_cast<double>(i)) << "\" width=\"" << num(cell) << "\" height=\"" << num(cell)
               << "\" fill=\"" << heat(v) << "\"/>\n";
        }
    const int size = static_cast<int>(std::clamp(cell * 0.8, 5.0, 11.0));
    for (std::size_t i = 0; i < n; ++i) {
        text(os, left - 4, top + cell * (static_cast<double>(i) + 0.75), f.categories[i], "end", 0, size);
        const double x = left + cell * (static_cast<double>(i) + 0.5);
        text(os, x, top + grid + 6, f.categories[i], "end", -90, size);
    }
    text(os, left + grid / 2, c.height - 8, f.x_label);
    return c.finish(f);
}

std::string render_distribution(const FigureSpec& f) {
    constexpr double left = 170, top = 50, row = 24, bar_max = 400;
    const auto& v = f.series[0].values;
    const double hi = std::max(*std::max_element(v.begin(), v.end()), 1e-300);
    const double scale = bar_max / hi;

    Canvas c;
    c.width = left + bar_max + 120;
    c.height = top + row * static_cast<double>(v.size()) + 40;
    auto& os = c.body;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double y = top + row * static_cast<double>(k);
        os << "<rect class=\"bar\" data-category=\"" << xml_escape(f.categories[k]) << "\" data-value=\"" << num(v[k])
           << "\" x=\"" << num(left) << "\" y=\"" << num(y) << "\" width=\"" << num(v[k] * scale) << "\" height=\""
           << num(row - 6) << "\" fill=\"" << colour(k) << "\"/>\n";
        text(os, left - 6, y + 13, f.categories[k], "end");
        char pct[32];
        std::snprintf(pct, sizeof pct, "%.2f%%", 100.0 * v[k]);
        text(os, left + v[k] * scale + 6, y + 13, pct, "start");
    }
    text(os, left + bar_max / 2, c.height - 8, f.x_label);
    return c.finish(f);
}

}  // namespace

std::string render_svg(const FigureSpec& f) {
    validate(f);
    switch (f.kind) {
        case FigureKind::bar:
        case FigureKind::grouped_bar: return render_bars(f);
        case FigureKind::heatmap: return render_heatmap(f);
        case FigureKind::distribution: return render_distribution(f);
    }
    throw InputError("unknown figure kind");
}

}  // namespace xids
