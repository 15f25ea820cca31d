#include "ffl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "ffl/csv.hpp"

namespace ffl::svg {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace

void LinePlot::add_series(std::string name, std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("series length mismatch");
    series_.push_back({std::move(name), std::move(xs), std::move(ys)});
}

void LinePlot::write(std::ostream& os) const {
    double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    bool first = true;
    for (const auto& s : series_)
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
            if (first) {
                x_lo = x_hi = s.xs[i];
                y_lo = y_hi = s.ys[i];
                first = false;
            }
            x_lo = std::min(x_lo, s.xs[i]);
            x_hi = std::max(x_hi, s.xs[i]);
            y_lo = std::min(y_lo, s.ys[i]);
            y_hi = std::max(y_hi, s.ys[i]);
        }
    if (x_hi == x_lo) x_hi = x_lo + 1;
    if (y_hi == y_lo) y_hi = y_lo + 1;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
    auto py = [&](double y) { return kTop + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h; };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\""
       << " text-anchor=\"middle\">" << title_ << "</text>\n";

    // frame + tick labels at the corners
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
       << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << kLeft << "\" y=\"" << kHeight - 28
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(x_lo) << "</text>\n";
    os << "<text x=\"" << kWidth - kRight << "\" y=\"" << kHeight - 28
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt(x_hi)
       << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 10
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt(y_hi)
       << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + plot_h
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt(y_lo)
       << "</text>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 8
       << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << x_label_
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << kTop + plot_h / 2
       << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\""
       << " transform=\"rotate(-90 16 " << kTop + plot_h / 2 << ")\">" << y_label_
       << "</text>\n";

    for (std::size_t si = 0; si < series_.size(); ++si) {
        const auto& s = series_[si];
        os << "<polyline fill=\"none\" stroke=\"" << kPalette[si % 10]
           << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
            os << fmt(px(s.xs[i])) << ',' << fmt(py(s.ys[i])) << ' ';
        }
        os << "\"/>\n";
        if (series_.size() > 1) {
            os << "<text x=\"" << kLeft + 8 << "\" y=\"" << kTop + 14 + 14 * si
               << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << kPalette[si % 10]
               << "\">" << s.name << "</text>\n";
        }
    }
    os << "</svg>\n";
}

void LinePlot::write_file(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write plot: " + path);
    write(f);
}

}  // namespace ffl::svg
