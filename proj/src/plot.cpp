#include "stpp/plot.hpp"

#include "stpp/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace stpp {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;
constexpr const char* kColours[] = {"#1b6ca8", "#c23b22", "#2e8b57", "#7b4fa0"};

struct Series {
  std::vector<std::pair<double, double>> pts;
  std::string colour;
  std::string label;
  bool dashed = false;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string escape(const std::string& s) {
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

}  // namespace

std::vector<std::size_t> quartile_indices(std::size_t n) {
  std::vector<std::size_t> out;
  if (n == 0) return out;
  for (double q : {0.25, 0.5, 0.75}) {
    const auto i = static_cast<std::size_t>(std::lround(q * static_cast<double>(n - 1)));
    if (out.empty() || out.back() != i) out.push_back(i);
  }
  return out;
}

std::string render_slices(const SummaryEstimate& e, SliceAxis axis, const std::string& title) {
  const bool by_r = axis == SliceAxis::fixed_t;
  const auto& xs = by_r ? e.grid.r : e.grid.t;
  const auto& fixed = by_r ? e.grid.t : e.grid.r;
  const auto slices = quartile_indices(fixed.size());

  std::vector<Series> series;
  for (std::size_t s = 0; s < slices.size(); ++s) {
    const std::string colour = kColours[s % 4];
    const std::string at = (by_r ? "t0=" : "r0=") + num(fixed[slices[s]]);
    Series f{{}, colour, "F " + at, true}, g{{}, colour, "G " + at, false};
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(by_r ? k : slices[s]);
      const auto j = static_cast<Eigen::Index>(by_r ? slices[s] : k);
      if (!std::isnan(e.F_hat(i, j))) f.pts.emplace_back(xs[k], e.F_hat(i, j));
      if (!std::isnan(e.G_hat(i, j))) g.pts.emplace_back(xs[k], e.G_hat(i, j));
    }
    series.push_back(std::move(f));
    series.push_back(std::move(g));
  }

  double x0 = 0.0, x1 = xs.back(), y0 = 0.0, y1 = 0.0;
  bool any = false;
  for (const auto& s : series)
    for (auto [x, y] : s.pts) {
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
      any = true;
    }
  if (y1 <= y0) y1 = y0 + 1.0;
  if (x1 <= x0) x1 = x0 + 1.0;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(title) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << num(px(xv)) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
       << num(xv) << "</text>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
       << num(yv) << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
     << (by_r ? "r" : "t") << "</text>\n";

  if (!any) {
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kTop + ph / 2
       << "\" text-anchor=\"middle\" fill=\"#b00\">warning: no defined cells</text>\n";
  }
  double legend_y = kTop + 10;
  for (const auto& s : series) {
    const std::string dash = s.dashed ? " stroke-dasharray=\"6,4\"" : "";
    if (s.pts.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.5\"" << dash
         << " points=\"";
      for (auto [x, y] : s.pts) os << num(px(x)) << ',' << num(py(y)) << ' ';
      os << "\"/>\n";
    }
    for (auto [x, y] : s.pts) {
      const double cx = px(x), cy = py(y);
      if (s.dashed)
        os << "<polygon fill=\"" << s.colour << "\" points=\"" << num(cx) << ',' << num(cy - 4) << ' '
           << num(cx + 4) << ',' << num(cy) << ' ' << num(cx) << ',' << num(cy + 4) << ' '
           << num(cx - 4) << ',' << num(cy) << "\"/>\n";
      else if (s.pts.size() == 1)
        os << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"3\" fill=\"" << s.colour
           << "\"/>\n";
    }
    const double lx = kWidth - kRight + 12;
    os << "<line x1=\"" << lx << "\" y1=\"" << legend_y << "\" x2=\"" << lx + 24 << "\" y2=\""
       << legend_y << "\" stroke=\"" << s.colour << "\" stroke-width=\"1.5\"" << dash << "/>\n";
    os << "<text x=\"" << lx + 30 << "\" y=\"" << legend_y + 4 << "\">" << escape(s.label) << "</text>\n";
    legend_y += 18;
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> write_slice_plots(const SummaryEstimate& e,
                                                     const std::filesystem::path& stem,
                                                     const std::string& title) {
  std::vector<std::filesystem::path> out;
  for (auto [axis, suffix] : {std::pair{SliceAxis::fixed_t, "_fixed_t.svg"},
                              std::pair{SliceAxis::fixed_r, "_fixed_r.svg"}}) {
    std::filesystem::path path = stem;
    path += suffix;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << render_slices(e, axis, title + (axis == SliceAxis::fixed_t ? " (fixed t0)" : " (fixed r0)"));
    out.push_back(path);
  }
  return out;
}

}  // namespace stpp
