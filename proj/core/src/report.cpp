#include "replaygan/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace replaygan::report {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 360;
constexpr int kMargin = 48;
constexpr const char* kGold = "#c8a04a";

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string svg_open(const std::string& title) {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"15\">"
       << escape_xml(title) << "</text>\n";
    return os.str();
}

std::vector<double> kde_curve(const std::vector<double>& sample, const std::vector<double>& grid) {
    const double n = static_cast<double>(sample.size());
    double mean = 0.0;
    for (double x : sample) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : sample) var += (x - mean) * (x - mean);
    var /= std::max(1.0, n - 1.0);
    double bw = 1.06 * std::sqrt(var) * std::pow(n, -0.2);  // Silverman
    if (bw <= 0.0) bw = 1.0;
    std::vector<double> density(grid.size(), 0.0);
    const double norm = 1.0 / (n * bw * std::sqrt(2.0 * 3.14159265358979323846));
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double x : sample) {
            const double z = (grid[g] - x) / bw;
            acc += std::exp(-0.5 * z * z);
        }
        density[g] = acc * norm;
    }
    return density;
}

std::string polyline(const std::vector<double>& xs, const std::vector<double>& ys, double x_lo, double x_hi,
                     double y_hi, const std::string& color) {
    std::ostringstream os;
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double px = kMargin + (xs[i] - x_lo) / std::max(1e-12, x_hi - x_lo) * (kWidth - 2 * kMargin);
        const double py = kHeight - kMargin - ys[i] / std::max(1e-12, y_hi) * (kHeight - 2 * kMargin);
        os << px << "," << py << " ";
    }
    os << "\"/>\n";
    return os.str();
}

std::string axes() {
    std::ostringstream os;
    os << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
       << kHeight - kMargin << "\" stroke=\"#333\"/>\n"
       << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
       << kHeight - kMargin << "\" stroke=\"#333\"/>\n";
    return os.str();
}

std::string color_for(double v, double lo, double hi) {
    // blue (lo) -> white (mid) -> red (hi)
    const double mid = 0.5 * (lo + hi);
    double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    t = std::clamp(t, 0.0, 1.0);
    int r, g, b;
    if (v >= mid) {
        const double u = (t - 0.5) * 2.0;
        r = 255;
        g = static_cast<int>(255 * (1.0 - 0.7 * u));
        b = static_cast<int>(255 * (1.0 - u));
    } else {
        const double u = (0.5 - t) * 2.0;
        r = static_cast<int>(255 * (1.0 - u));
        g = static_cast<int>(255 * (1.0 - 0.6 * u));
        b = 255;
    }
    std::ostringstream os;
    os << "rgb(" << r << "," << g << "," << b << ")";
    return os.str();
}

}  // namespace

std::string kde_svg(const std::vector<double>& real_values, const std::vector<double>& syn_values,
                    const std::string& title, const std::string& accent) {
    if (real_values.empty() || syn_values.empty()) throw std::invalid_argument("kde_svg: empty sample");
    double lo = real_values[0], hi = real_values[0];
    for (double v : real_values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : syn_values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    std::vector<double> grid(160);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
    auto dr = kde_curve(real_values, grid);
    auto ds = kde_curve(syn_values, grid);
    double peak = 1e-12;
    for (double v : dr) peak = std::max(peak, v);
    for (double v : ds) peak = std::max(peak, v);

    std::ostringstream os;
    os << svg_open(title) << axes();
    os << polyline(grid, dr, lo, hi, peak, kGold);
    os << polyline(grid, ds, lo, hi, peak, accent);
    os << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kMargin << "\" text-anchor=\"end\" "
       << "font-family=\"sans-serif\" font-size=\"12\" fill=\"" << kGold << "\">real</text>\n";
    os << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kMargin + 16 << "\" text-anchor=\"end\" "
       << "font-family=\"sans-serif\" font-size=\"12\" fill=\"" << accent << "\">synthetic</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string barplot_svg(const std::vector<std::string>& levels, const std::vector<double>& real_frac,
                        const std::vector<double>& syn_frac, const std::string& title, const std::string& accent) {
    if (levels.size() != real_frac.size() || levels.size() != syn_frac.size())
        throw std::invalid_argument("barplot_svg: mismatched inputs");
    double peak = 1e-12;
    for (double v : real_frac) peak = std::max(peak, v);
    for (double v : syn_frac) peak = std::max(peak, v);

    const double span = static_cast<double>(kWidth - 2 * kMargin);
    const double group = span / static_cast<double>(levels.size());
    const double bar = group * 0.35;

    std::ostringstream os;
    os << svg_open(title) << axes();
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double x0 = kMargin + group * static_cast<double>(i) + group * 0.12;
        const double hr = real_frac[i] / peak * (kHeight - 2 * kMargin);
        const double hs = syn_frac[i] / peak * (kHeight - 2 * kMargin);
        os << "<rect x=\"" << x0 << "\" y=\"" << kHeight - kMargin - hr << "\" width=\"" << bar << "\" height=\"" << hr
           << "\" fill=\"" << kGold << "\"/>\n";
        os << "<rect x=\"" << x0 + bar + 2 << "\" y=\"" << kHeight - kMargin - hs << "\" width=\"" << bar
           << "\" height=\"" << hs << "\" fill=\"" << accent << "\"/>\n";
        os << "<text x=\"" << x0 + bar << "\" y=\"" << kHeight - kMargin + 14
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">" << escape_xml(levels[i])
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string heatmap_svg(const Tensor& matrix, const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels, const std::string& title, double lo, double hi) {
    if (matrix.rank() != 2) throw std::invalid_argument("heatmap_svg: matrix must be 2-D");
    const std::int64_t rows = matrix.dim(0), cols = matrix.dim(1);
    const double cell_w = static_cast<double>(kWidth - 2 * kMargin - 60) / static_cast<double>(cols);
    const double cell_h = static_cast<double>(kHeight - 2 * kMargin) / static_cast<double>(rows);

    std::ostringstream os;
    os << svg_open(title);
    for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c < cols; ++c) {
            const double x = kMargin + 60 + cell_w * static_cast<double>(c);
            const double y = kMargin + cell_h * static_cast<double>(r);
            os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w << "\" height=\"" << cell_h
               << "\" fill=\"" << color_for(matrix.at2(r, c), lo, hi) << "\" stroke=\"#999\"/>\n";
            std::ostringstream val;
            val.precision(2);
            val << std::fixed << matrix.at2(r, c);
            os << "<text x=\"" << x + cell_w / 2 << "\" y=\"" << y + cell_h / 2 + 3
               << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\">" << val.str() << "</text>\n";
        }
    }
    for (std::int64_t r = 0; r < rows && r < static_cast<std::int64_t>(row_labels.size()); ++r)
        os << "<text x=\"" << kMargin + 54 << "\" y=\"" << kMargin + cell_h * (static_cast<double>(r) + 0.5) + 3
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"9\">"
           << escape_xml(row_labels[static_cast<std::size_t>(r)]) << "</text>\n";
    for (std::int64_t c = 0; c < cols && c < static_cast<std::int64_t>(col_labels.size()); ++c)
        os << "<text x=\"" << kMargin + 60 + cell_w * (static_cast<double>(c) + 0.5) << "\" y=\""
           << kMargin + cell_h * static_cast<double>(rows) + 14
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"8\">"
           << escape_xml(col_labels[static_cast<std::size_t>(c)]) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string line_svg(const std::vector<std::pair<std::string, std::vector<double>>>& series, const std::string& title,
                     const std::string& y_label) {
    if (series.empty()) throw std::invalid_argument("line_svg: no series");
    const char* palette[] = {"#a0622d", "#c13bbc", "#2aa4c6", "#4a8f3c", "#666666"};
    double y_lo = 0.0, y_hi = 0.0;
    std::size_t n = 0;
    bool first = true;
    for (const auto& [name, ys] : series) {
        n = std::max(n, ys.size());
        for (double v : ys) {
            if (first) {
                y_lo = y_hi = v;
                first = false;
            }
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
    }
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;

    std::ostringstream os;
    os << svg_open(title) << axes();
    int color = 0;
    for (const auto& [name, ys] : series) {
        std::ostringstream pts;
        pts << "<polyline fill=\"none\" stroke=\"" << palette[color % 5] << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < ys.size(); ++i) {
            const double px =
                kMargin + static_cast<double>(i) / std::max<std::size_t>(n - 1, 1) * (kWidth - 2 * kMargin);
            const double py = kHeight - kMargin - (ys[i] - y_lo) / (y_hi - y_lo) * (kHeight - 2 * kMargin);
            pts << px << "," << py << " ";
        }
        pts << "\"/>\n";
        os << pts.str();
        os << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kMargin + 16 * color
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << palette[color % 5]
           << "\">" << escape_xml(name) << "</text>\n";
        ++color;
    }
    os << "<text x=\"14\" y=\"" << kHeight / 2 << "\" font-family=\"sans-serif\" font-size=\"11\" "
       << "transform=\"rotate(-90 14 " << kHeight / 2 << ")\">" << escape_xml(y_label) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
}

}  // namespace replaygan::report
