#include "dtx/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "dtx/error.hpp"

namespace dtx {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& s, std::size_t row, std::size_t col) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("surface CSV row " + std::to_string(row) + ", column " + std::to_string(col) +
                    ": '" + s + "' is not a number");
  return v;
}

}  // namespace

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_surface_csv(std::ostream& out, const TuningResult& result) {
  for (const auto& a : result.axes) out << a << ',';
  out << "mean_loss";
  const std::size_t n = result.surface.empty() ? 0 : result.surface.front().losses.size();
  for (std::size_t i = 0; i < n; ++i) out << ",loss_" << i;
  out << '\n';
  for (const SurfaceRow& row : result.surface) {
    for (double v : row.point) out << format_real(v) << ',';
    out << format_real(row.mean_loss);
    for (double l : row.losses) out << ',' << format_real(l);
    out << '\n';
  }
}

void write_pieces_csv(std::ostream& out, std::span<const AlphaPiece> pieces) {
  out << "alpha_lo,alpha_hi,mean_loss,mean_leaves\n";
  for (const AlphaPiece& p : pieces)
    out << format_real(p.lo) << ',' << format_real(p.hi) << ',' << format_real(p.mean_loss) << ','
        << format_real(p.mean_leaves) << '\n';
}

void write_frontier_csv(std::ostream& out, std::span<const FrontierRow> rows) {
  out << "eta,alpha_tilde,accuracy,leaves,eta_times_leaves\n";
  for (const FrontierRow& r : rows)
    out << format_real(r.eta) << ',' << format_real(r.alpha_tilde) << ',' << format_real(r.accuracy)
        << ',' << format_real(r.leaves) << ',' << format_real(r.eta_times_leaves) << '\n';
}

nlohmann::json best_json(const TuningResult& result) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t k = 0; k < result.axes.size(); ++k) {
    if (result.axes[k] == "beta")
      j[result.axes[k]] = static_cast<int>(result.best_point[k]);
    else
      j[result.axes[k]] = result.best_point[k];
  }
  j["mean_loss"] = result.best_loss;
  if (!result.pieces.empty()) {
    const AlphaPiece& p = result.pieces[result.best_piece];
    j["alpha_tilde"] = result.best_alpha;
    j["alpha_lo"] = p.lo;
    j["alpha_hi"] = std::isinf(p.hi) ? nlohmann::json("inf") : nlohmann::json(p.hi);
    j["mean_leaves"] = p.mean_leaves;
  }
  return j;
}

Surface read_surface_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("surface CSV is empty");
  const auto header = split_commas(line);
  auto it = std::find(header.begin(), header.end(), "mean_loss");
  if (it == header.end()) throw DataError("surface CSV has no mean_loss column");
  Surface s;
  s.axes.assign(header.begin(), it);
  const std::size_t loss_col = s.axes.size();
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size())
      throw DataError("surface CSV row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " columns, header has " +
                      std::to_string(header.size()));
    std::vector<double> point;
    for (std::size_t c = 0; c < loss_col; ++c) point.push_back(parse_cell(cells[c], row, c + 1));
    s.points.push_back(std::move(point));
    s.mean_loss.push_back(parse_cell(cells[loss_col], row, loss_col + 1));
  }
  if (s.points.empty()) throw DataError("surface CSV has no rows");
  return s;
}

std::string heatmap_svg(const Surface& surface) {
  if (surface.axes.size() != 2)
    throw DataError("heatmap needs exactly two parameter axes, surface has " +
                    std::to_string(surface.axes.size()));
  std::vector<double> xs, ys;
  for (const auto& p : surface.points) {
    xs.push_back(p[0]);
    ys.push_back(p[1]);
  }
  for (auto* v : {&xs, &ys}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  std::vector<double> acc;
  for (double l : surface.mean_loss) acc.push_back(1.0 - l);
  const double lo = *std::min_element(acc.begin(), acc.end());
  const double hi = *std::max_element(acc.begin(), acc.end());

  constexpr int cell = 16, left = 60, top = 20, legend = 40;
  const int width = std::max(left + cell * static_cast<int>(xs.size()) + 20, left + 320);
  const int plot_h = cell * static_cast<int>(ys.size());
  const int height = top + plot_h + 40 + legend;

  std::ostringstream svg;
  char buf[160];
  auto fill = [&](double a) {
    const double t = hi > lo ? (a - lo) / (hi - lo) : 1.0;
    const int c = static_cast<int>(std::lround(255.0 * t));
    std::snprintf(buf, sizeof buf, "#%02X%02X00", c, c);
    return std::string(buf);
  };
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"monospace\" font-size=\"9\">\n";
  for (std::size_t k = 0; k < surface.points.size(); ++k) {
    const auto& p = surface.points[k];
    const auto xi = std::lower_bound(xs.begin(), xs.end(), p[0]) - xs.begin();
    const auto yi = std::lower_bound(ys.begin(), ys.end(), p[1]) - ys.begin();
    // Second axis grows upwards.
    const long y = top + plot_h - cell * (yi + 1);
    svg << "<rect x=\"" << left + cell * xi << "\" y=\"" << y << "\" width=\"" << cell
        << "\" height=\"" << cell << "\" fill=\"" << fill(acc[k]) << "\"><title>"
        << format_real(p[0]) << ',' << format_real(p[1]) << ": " << format_real(acc[k])
        << "</title></rect>\n";
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs.size() > 10 && i % 5 != 0) continue;
    std::snprintf(buf, sizeof buf, "%.4g", xs[i]);
    svg << "<text x=\"" << left + cell * static_cast<int>(i) + cell / 2 << "\" y=\""
        << top + plot_h + 12 << "\" text-anchor=\"middle\">" << buf << "</text>\n";
  }
  for (std::size_t i = 0; i < ys.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.4g", ys[i]);
    svg << "<text x=\"" << left - 4 << "\" y=\"" << top + plot_h - cell * static_cast<int>(i) - 4
        << "\" text-anchor=\"end\">" << buf << "</text>\n";
  }
  svg << "<text x=\"" << left + cell * static_cast<int>(xs.size()) / 2 << "\" y=\""
      << top + plot_h + 26 << "\" text-anchor=\"middle\">" << surface.axes[0] << "</text>\n";
  svg << "<text x=\"12\" y=\"" << top + plot_h / 2 << "\">" << surface.axes[1] << "</text>\n";

  const int ly = top + plot_h + 36;
  svg << "<rect x=\"" << left << "\" y=\"" << ly << "\" width=\"" << cell << "\" height=\"" << cell
      << "\" fill=\"" << fill(lo) << "\"/>\n";
  svg << "<text x=\"" << left + cell + 4 << "\" y=\"" << ly + 12 << "\">min " << format_real(lo)
      << "</text>\n";
  svg << "<rect x=\"" << left + 160 << "\" y=\"" << ly << "\" width=\"" << cell << "\" height=\""
      << cell << "\" fill=\"" << fill(hi) << "\"/>\n";
  svg << "<text x=\"" << left + 160 + cell + 4 << "\" y=\"" << ly + 12 << "\">max "
      << format_real(hi) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace dtx
