#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtx/tune.hpp"

namespace dtx {

/// 17 significant digits; "inf" for infinity.
std::string format_real(double v);

/// Columns: one per axis, mean_loss, then loss_0 .. loss_{N-1}.
void write_surface_csv(std::ostream& out, const TuningResult& result);
/// Columns: alpha_lo, alpha_hi, mean_loss, mean_leaves.
void write_pieces_csv(std::ostream& out, std::span<const AlphaPiece> pieces);
/// Columns: eta, alpha_tilde, accuracy, leaves, eta_times_leaves.
void write_frontier_csv(std::ostream& out, std::span<const FrontierRow> rows);

/// Best point keyed by axis name, plus mean_loss (and alpha_tilde for the
/// exact pruning tuners). Axes named "beta" are written as integers.
nlohmann::json best_json(const TuningResult& result);

struct Surface {
  std::vector<std::string> axes;
  std::vector<std::vector<double>> points;
  std::vector<double> mean_loss;
};

/// Reads the axis columns and mean_loss of a surface CSV.
Surface read_surface_csv(std::istream& in);

/// Grid of cells, first axis horizontal and second vertical. Brightness is
/// (accuracy - min) / (max - min), or 1 when all cells are equal, rendered as
/// the fill #RRGG00 with R = G = round(255 * brightness). Throws DataError
/// unless the surface has exactly two axes.
std::string heatmap_svg(const Surface& surface);

}  // namespace dtx
