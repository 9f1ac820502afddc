#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include "impact_game/errors.hpp"
#include "impact_game/io.hpp"

namespace impact {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 640.0;
constexpr double kPad = 0.05;  // margin as a fraction of the data span

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

struct Axes {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

  void include(double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }

  void pad() {
    const double dx = x1 > x0 ? x1 - x0 : 1.0;
    const double dy = y1 > y0 ? y1 - y0 : 1.0;
    x0 -= kPad * dx;
    x1 += kPad * dx;
    y0 -= kPad * dy;
    y1 += kPad * dy;
  }

  double px(double x) const { return (x - x0) / (x1 - x0) * kWidth; }
  double py(double y) const { return kHeight - (y - y0) / (y1 - y0) * kHeight; }
};

Axes empty_axes() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Axes a;
  a.x0 = a.y0 = inf;
  a.x1 = a.y1 = -inf;
  return a;
}

void open_svg(std::ostringstream& os, const std::string& title) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth) << "\" height=\""
     << fmt(kHeight) << "\" viewBox=\"0 0 " << fmt(kWidth) << ' ' << fmt(kHeight) << "\">\n"
     << "  <title>" << title << "</title>\n"
     << "  <rect x=\"0\" y=\"0\" width=\"" << fmt(kWidth) << "\" height=\"" << fmt(kHeight)
     << "\" fill=\"white\"/>\n";
}

}  // namespace

std::string scatter_svg(const ScenarioReport& report) {
  bool any = false;
  for (const auto& rr : report.runs) any = any || !rr.is_pairs.empty();
  if (!any) throw EmptyInputError("scatter: report has no test points");

  const auto& nash = report.refs.nash_is;
  const auto& pareto = report.refs.pareto_is;
  Axes ax = empty_axes();
  for (const auto& rr : report.runs) {
    for (const auto& p : rr.is_pairs) ax.include(p[0], p[1]);
    ax.include(rr.centroid[0], rr.centroid[1]);
  }
  ax.include(nash[0], nash[1]);
  ax.include(pareto[0], pareto[1]);
  for (const auto& f : report.refs.front) ax.include(f.eis[0], f.eis[1]);
  ax.pad();

  std::ostringstream os;
  open_svg(os, "Implementation shortfall: " + report.label);

  if (!report.refs.front.empty()) {
    auto front = report.refs.front;
    std::sort(front.begin(), front.end(),
              [](const auto& a, const auto& b) { return a.eis[0] < b.eis[0]; });
    os << "  <polyline id=\"front\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < front.size(); ++i) {
      os << (i ? " " : "") << fmt(ax.px(front[i].eis[0])) << ',' << fmt(ax.py(front[i].eis[1]));
    }
    os << "\"/>\n";
  }

  const double rx = ax.px(pareto[0]);
  const double ry = ax.py(nash[1]);
  os << "  <rect id=\"collusive\" x=\"" << fmt(rx) << "\" y=\"" << fmt(ry) << "\" width=\""
     << fmt(ax.px(nash[0]) - rx) << "\" height=\"" << fmt(ax.py(pareto[1]) - ry)
     << "\" fill=\"#ffd54f\" fill-opacity=\"0.3\" stroke=\"#b28704\"/>\n";
  os << "  <line id=\"quadrant-v\" x1=\"" << fmt(ax.px(nash[0])) << "\" y1=\"0.000\" x2=\""
     << fmt(ax.px(nash[0])) << "\" y2=\"" << fmt(kHeight)
     << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  os << "  <line id=\"quadrant-h\" x1=\"0.000\" y1=\"" << fmt(ax.py(nash[1])) << "\" x2=\""
     << fmt(kWidth) << "\" y2=\"" << fmt(ax.py(nash[1]))
     << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";

  os << "  <g id=\"iterations\" fill=\"#1f77b4\" fill-opacity=\"0.25\">\n";
  for (const auto& rr : report.runs) {
    for (const auto& p : rr.is_pairs) {
      os << "    <circle class=\"iter\" cx=\"" << fmt(ax.px(p[0])) << "\" cy=\"" << fmt(ax.py(p[1]))
         << "\" r=\"1.5\"/>\n";
    }
  }
  os << "  </g>\n  <g id=\"centroids\" fill=\"#d62728\">\n";
  for (const auto& rr : report.runs) {
    os << "    <circle class=\"centroid\" cx=\"" << fmt(ax.px(rr.centroid[0])) << "\" cy=\""
       << fmt(ax.py(rr.centroid[1])) << "\" r=\"4\"/>\n";
  }
  os << "  </g>\n";
  os << "  <circle id=\"nash\" cx=\"" << fmt(ax.px(nash[0])) << "\" cy=\"" << fmt(ax.py(nash[1]))
     << "\" r=\"6\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  os << "  <circle id=\"pareto\" cx=\"" << fmt(ax.px(pareto[0])) << "\" cy=\""
     << fmt(ax.py(pareto[1])) << "\" r=\"6\" fill=\"none\" stroke=\"green\" stroke-width=\"2\"/>\n";
  os << "  <text x=\"8\" y=\"" << fmt(kHeight - 8) << "\" font-size=\"12\">IS agent 1 ["
     << fmt(ax.x0) << ", " << fmt(ax.x1) << "], IS agent 2 [" << fmt(ax.y0) << ", "
     << fmt(ax.y1) << "]</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string strategies_svg(const ScenarioReport& report) {
  if (report.runs.empty()) throw EmptyInputError("strategies: report has no runs");
  std::size_t n = report.refs.nash.first.size();
  for (const auto& rr : report.runs) n = std::max({n, rr.avg_schedule[0].size(), rr.avg_schedule[1].size()});
  if (n == 0) throw EmptyInputError("strategies: no schedules to draw");

  Axes ax = empty_axes();
  ax.include(1.0, 0.0);
  ax.include(static_cast<double>(n), 0.0);
  for (const auto& rr : report.runs) {
    for (const auto& s : rr.avg_schedule) {
      for (std::size_t t = 0; t < s.size(); ++t) ax.include(static_cast<double>(t + 1), s[t]);
    }
  }
  for (std::size_t t = 0; t < report.refs.nash.first.size(); ++t) {
    ax.include(static_cast<double>(t + 1), report.refs.nash.first[t]);
  }
  ax.pad();

  auto polyline = [&](std::ostringstream& os, const std::vector<double>& s, const char* cls,
                      const char* style) {
    os << "    <polyline class=\"" << cls << "\" fill=\"none\" " << style << " points=\"";
    for (std::size_t t = 0; t < s.size(); ++t) {
      os << (t ? " " : "") << fmt(ax.px(static_cast<double>(t + 1))) << ',' << fmt(ax.py(s[t]));
    }
    os << "\"/>\n";
  };

  std::ostringstream os;
  open_svg(os, "Average selling schedules: " + report.label);
  os << "  <g id=\"agent1\">\n";
  for (const auto& rr : report.runs) {
    polyline(os, rr.avg_schedule[0], "agent1", "stroke=\"#1f77b4\" stroke-opacity=\"0.6\"");
  }
  os << "  </g>\n  <g id=\"agent2\">\n";
  for (const auto& rr : report.runs) {
    polyline(os, rr.avg_schedule[1], "agent2", "stroke=\"#d62728\" stroke-opacity=\"0.6\"");
  }
  os << "  </g>\n  <g id=\"references\">\n";
  if (!report.refs.nash.first.empty()) {
    polyline(os, report.refs.nash.first, "nash", "stroke=\"black\" stroke-width=\"2\"");
    const std::vector<double> twap(n, report.config.market.q0 / static_cast<double>(n));
    polyline(os, twap, "twap", "stroke=\"green\" stroke-dasharray=\"6,4\" stroke-width=\"2\"");
  }
  os << "  </g>\n</svg>\n";
  return os.str();
}

void render_scatter(const ScenarioReport& report, const std::filesystem::path& path) {
  write_text_file(path, scatter_svg(report));
}

void render_strategies(const ScenarioReport& report, const std::filesystem::path& path) {
  write_text_file(path, strategies_svg(report));
}

}  // namespace impact
