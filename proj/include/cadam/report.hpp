#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cadam/errors.hpp"
#include "cadam/stream.hpp"

namespace cadam {

namespace detail {

// Shortest decimal that round-trips the exact double.
inline std::string format_double(double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// Fixed two decimals, for SVG coordinates.
inline std::string format_coord(double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::fixed, 2);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{})
    throw io_error("csv: bad float field '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

// One row per step: step,loss,regret,cum_regret,alignment_ratio,
// masked_fraction[,param_0..param_k]. Floats are written as the shortest
// decimal that parses back to the same bits.
inline void write_run_csv(const RunRecord& rec,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path.string());

  out << "step,loss,regret,cum_regret,alignment_ratio,masked_fraction";
  for (std::size_t k = 0; k < rec.traj_dim; ++k)
    out << ",param_" << k;
  out << '\n';

  const auto n = static_cast<std::size_t>(rec.steps_completed);
  for (std::size_t i = 0; i < n; ++i) {
    out << (i + 1) << ',' << detail::format_double(rec.loss[i]) << ','
        << detail::format_double(rec.regret[i]) << ','
        << detail::format_double(rec.cum_regret[i]) << ','
        << detail::format_double(rec.alignment[i]) << ','
        << detail::format_double(rec.masked_fraction[i]);
    for (std::size_t k = 0; k < rec.traj_dim; ++k)
      out << ','
          << detail::format_double(rec.trajectory[i * rec.traj_dim + k]);
    out << '\n';
  }
  if (!out) throw io_error("write failed: " + path.string());
}

// Restores the per-step columns (the scenario itself is not serialized).
inline RunRecord read_run_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path.string());

  RunRecord rec;
  std::string line;
  if (!std::getline(in, line)) throw io_error("empty csv: " + path.string());
  const auto header = detail::split(line, ',');
  if (header.size() < 6 || header[0] != "step")
    throw io_error("unrecognized csv header: " + path.string());
  rec.traj_dim = header.size() - 6;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != header.size())
      throw io_error("ragged csv row: " + path.string());
    rec.loss.push_back(detail::parse_double(fields[1]));
    rec.regret.push_back(detail::parse_double(fields[2]));
    rec.cum_regret.push_back(detail::parse_double(fields[3]));
    rec.alignment.push_back(detail::parse_double(fields[4]));
    rec.masked_fraction.push_back(detail::parse_double(fields[5]));
    for (std::size_t k = 0; k < rec.traj_dim; ++k)
      rec.trajectory.push_back(detail::parse_double(fields[6 + k]));
    ++rec.steps_completed;
  }
  return rec;
}

inline void write_comparison_csv(const ComparisonTable& table,
                                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path.string());
  out << "algorithm,n_seeds,n_diverged,final_loss_mean,final_loss_std,"
         "cum_regret_mean,cum_regret_std,alignment_mean,auc_mean,auc_std\n";
  for (const auto& r : table.rows) {
    out << algorithm_name(r.algorithm) << ',' << r.n_seeds << ','
        << r.n_diverged << ',' << detail::format_double(r.final_loss_mean)
        << ',' << detail::format_double(r.final_loss_std) << ','
        << detail::format_double(r.cum_regret_mean) << ','
        << detail::format_double(r.cum_regret_std) << ','
        << detail::format_double(r.alignment_mean) << ','
        << detail::format_double(r.auc_mean) << ','
        << detail::format_double(r.auc_std) << '\n';
  }
  if (!out) throw io_error("write failed: " + path.string());
}

enum class PlotKind { LossCurve, RegretCurve, Trajectory2D, AlignmentCurve };

namespace detail {

inline constexpr std::array<std::string_view, 11> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#000000"};

inline std::string_view series_color(Algorithm a) {
  return kPalette[static_cast<std::size_t>(a) % kPalette.size()];
}

struct Bounds {
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -std::numeric_limits<double>::infinity();
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  }
  void pad() {
    const double dx = x_hi - x_lo, dy = y_hi - y_lo;
    x_lo -= dx == 0.0 ? 0.5 : 0.05 * dx;
    x_hi += dx == 0.0 ? 0.5 : 0.05 * dx;
    y_lo -= dy == 0.0 ? 0.5 : 0.05 * dy;
    y_hi += dy == 0.0 ? 0.5 : 0.05 * dy;
  }
};

struct Canvas {
  static constexpr double kWidth = 720.0, kHeight = 480.0;
  static constexpr double kLeft = 56.0, kRight = 16.0;
  static constexpr double kTop = 24.0, kBottom = 40.0;
  Bounds b;

  double px(double x) const {
    return kLeft + (x - b.x_lo) / (b.x_hi - b.x_lo) *
                       (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom -
           (y - b.y_lo) / (b.y_hi - b.y_lo) * (kHeight - kTop - kBottom);
  }
};

inline void svg_polyline(std::ostream& out, const Canvas& cv,
                         std::span<const double> xs, std::span<const double> ys,
                         std::string_view color, bool dashed = false) {
  out << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\"";
  if (dashed) out << " stroke-dasharray=\"6 4\"";
  out << " points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ' ';
    out << format_coord(cv.px(xs[i])) << ',' << format_coord(cv.py(ys[i]));
  }
  out << "\"/>\n";
}

inline void svg_frame(std::ostream& out, const Canvas& cv,
                      std::string_view x_label, std::string_view y_label) {
  out << "<rect x=\"" << format_coord(Canvas::kLeft) << "\" y=\""
      << format_coord(Canvas::kTop) << "\" width=\""
      << format_coord(Canvas::kWidth - Canvas::kLeft - Canvas::kRight)
      << "\" height=\""
      << format_coord(Canvas::kHeight - Canvas::kTop - Canvas::kBottom)
      << "\" fill=\"none\" stroke=\"#888888\"/>\n";
  out << "<text x=\"" << format_coord(Canvas::kWidth / 2.0) << "\" y=\""
      << format_coord(Canvas::kHeight - 8.0)
      << "\" font-size=\"12\" text-anchor=\"middle\">" << x_label
      << "</text>\n";
  out << "<text x=\"14\" y=\"" << format_coord(Canvas::kHeight / 2.0)
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 "
         "14 "
      << format_coord(Canvas::kHeight / 2.0) << ")\">" << y_label
      << "</text>\n";
  // corner labels with the data range
  out << "<text x=\"" << format_coord(Canvas::kLeft) << "\" y=\""
      << format_coord(Canvas::kHeight - Canvas::kBottom + 14.0)
      << "\" font-size=\"10\">" << format_coord(cv.b.x_lo) << "</text>\n";
  out << "<text x=\""
      << format_coord(Canvas::kWidth - Canvas::kRight)
      << "\" y=\"" << format_coord(Canvas::kHeight - Canvas::kBottom + 14.0)
      << "\" font-size=\"10\" text-anchor=\"end\">" << format_coord(cv.b.x_hi)
      << "</text>\n";
  out << "<text x=\"" << format_coord(Canvas::kLeft - 4.0) << "\" y=\""
      << format_coord(Canvas::kHeight - Canvas::kBottom)
      << "\" font-size=\"10\" text-anchor=\"end\">" << format_coord(cv.b.y_lo)
      << "</text>\n";
  out << "<text x=\"" << format_coord(Canvas::kLeft - 4.0) << "\" y=\""
      << format_coord(Canvas::kTop + 10.0)
      << "\" font-size=\"10\" text-anchor=\"end\">" << format_coord(cv.b.y_hi)
      << "</text>\n";
}

inline void svg_legend(std::ostream& out, std::span<const RunRecord> records) {
  double y = Canvas::kTop + 14.0;
  for (const auto& rec : records) {
    const Algorithm a = rec.scenario.hp.algorithm;
    out << "<text x=\"" << format_coord(Canvas::kWidth - 150.0) << "\" y=\""
        << format_coord(y) << "\" font-size=\"11\" fill=\"" << series_color(a)
        << "\">" << algorithm_name(a) << " seed " << rec.scenario.seed
        << "</text>\n";
    y += 14.0;
  }
}

inline std::span<const double> curve_of(const RunRecord& rec, PlotKind kind) {
  switch (kind) {
    case PlotKind::LossCurve: return rec.loss;
    case PlotKind::RegretCurve: return rec.cum_regret;
    case PlotKind::AlignmentCurve: return rec.alignment;
    default: return {};
  }
}

// 64x64 loss grid under the trajectory, grayscale by normalized log-loss.
inline void svg_contour(std::ostream& out, const Canvas& cv,
                        const Landscape2D& ls) {
  constexpr int kGrid = 64;
  std::array<double, kGrid * kGrid> vals{};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int r = 0; r < kGrid; ++r) {
    for (int c = 0; c < kGrid; ++c) {
      const double x =
          cv.b.x_lo + (c + 0.5) / kGrid * (cv.b.x_hi - cv.b.x_lo);
      const double y =
          cv.b.y_lo + (r + 0.5) / kGrid * (cv.b.y_hi - cv.b.y_lo);
      const double v = std::log1p(eval2d(ls, x, y).loss);
      vals[static_cast<std::size_t>(r * kGrid + c)] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double cell_w =
      (Canvas::kWidth - Canvas::kLeft - Canvas::kRight) / kGrid;
  const double cell_h =
      (Canvas::kHeight - Canvas::kTop - Canvas::kBottom) / kGrid;
  for (int r = 0; r < kGrid; ++r) {
    for (int c = 0; c < kGrid; ++c) {
      const double v = vals[static_cast<std::size_t>(r * kGrid + c)];
      const double u = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      const int shade = 255 - static_cast<int>(u * 80.0);  // light wash
      out << "<rect x=\"" << format_coord(Canvas::kLeft + c * cell_w)
          << "\" y=\""
          << format_coord(Canvas::kHeight - Canvas::kBottom -
                          (r + 1) * cell_h)
          << "\" width=\"" << format_coord(cell_w) << "\" height=\""
          << format_coord(cell_h) << "\" fill=\"rgb(" << shade << ','
          << shade << ",255)\"/>\n";
    }
  }
}

}  // namespace detail

// Renders one standalone SVG. Curve kinds plot the metric against the step
// index, one polyline per record. Trajectory2D plots the parameter path
// (d = 2) or step-vs-parameter (d = 1), overlays the optimum, and for 2D
// landscapes draws the loss wash behind it. Deterministic: identical inputs
// produce identical bytes.
inline void render_svg(std::span<const RunRecord> records, PlotKind kind,
                       const std::filesystem::path& path) {
  if (records.empty())
    throw std::invalid_argument("render_svg: no records given");

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
         "width=\"720\" height=\"480\" viewBox=\"0 0 720 480\">\n"
      << "<rect width=\"720\" height=\"480\" fill=\"#ffffff\"/>\n";

  detail::Canvas cv;

  if (kind != PlotKind::Trajectory2D) {
    for (const auto& rec : records) {
      const auto ys = detail::curve_of(rec, kind);
      for (std::size_t i = 0; i < ys.size(); ++i)
        cv.b.add(static_cast<double>(i + 1), ys[i]);
    }
    cv.b.pad();
    const char* ylab = kind == PlotKind::LossCurve      ? "loss"
                       : kind == PlotKind::RegretCurve  ? "cumulative regret"
                                                        : "alignment ratio";
    detail::svg_frame(out, cv, "step", ylab);
    for (const auto& rec : records) {
      const auto ys = detail::curve_of(rec, kind);
      std::vector<double> xs(ys.size());
      for (std::size_t i = 0; i < xs.size(); ++i)
        xs[i] = static_cast<double>(i + 1);
      detail::svg_polyline(out, cv, xs, ys,
                           detail::series_color(rec.scenario.hp.algorithm));
    }
    detail::svg_legend(out, records);
  } else {
    const std::size_t dim = records.front().traj_dim;
    for (const auto& rec : records) {
      if (rec.traj_dim == 0 || rec.trajectory.empty())
        throw std::invalid_argument(
            "render_svg: no stored trajectory; enable record_trajectory on "
            "the scenario");
      if (rec.traj_dim != dim)
        throw dimension_error("render_svg: mixed trajectory dimensions");
      if (dim > 2)
        throw dimension_error("render_svg: trajectory plots need d <= 2");
    }

    const RunRecord& first = records.front();
    const auto* ls = std::get_if<Landscape2D>(&first.scenario.objective);

    for (const auto& rec : records) {
      const auto n = static_cast<std::size_t>(rec.steps_completed);
      for (std::size_t i = 0; i < n; ++i) {
        if (dim == 2)
          cv.b.add(rec.trajectory[2 * i], rec.trajectory[2 * i + 1]);
        else
          cv.b.add(static_cast<double>(i + 1), rec.trajectory[i]);
      }
      // frame always covers the optimum as well
      if (dim == 2 && ls) {
        const auto opt = minimum(*ls);
        cv.b.add(opt[0], opt[1]);
      }
      if (dim == 1)
        for (std::size_t i = 0; i < rec.opt_path.size(); ++i)
          cv.b.add(static_cast<double>(i + 1), rec.opt_path[i]);
    }
    cv.b.pad();

    if (ls && dim == 2) detail::svg_contour(out, cv, *ls);
    detail::svg_frame(out, cv, dim == 2 ? "param_0" : "step",
                      dim == 2 ? "param_1" : "param_0");

    // optimum overlay: path for moving minima, marker for landscapes
    if (!first.opt_path.empty() && dim == 1) {
      std::vector<double> xs(first.opt_path.size());
      for (std::size_t i = 0; i < xs.size(); ++i)
        xs[i] = static_cast<double>(i + 1);
      detail::svg_polyline(out, cv, xs, first.opt_path, "#444444", true);
    } else if (ls) {
      const auto opt = minimum(*ls);
      out << "<circle cx=\"" << detail::format_coord(cv.px(opt[0]))
          << "\" cy=\"" << detail::format_coord(cv.py(opt[1]))
          << "\" r=\"5\" fill=\"none\" stroke=\"#d62728\" "
             "stroke-width=\"2\"/>\n";
    }

    for (const auto& rec : records) {
      const auto n = static_cast<std::size_t>(rec.steps_completed);
      std::vector<double> xs(n), ys(n);
      for (std::size_t i = 0; i < n; ++i) {
        xs[i] = dim == 2 ? rec.trajectory[2 * i] : static_cast<double>(i + 1);
        ys[i] = dim == 2 ? rec.trajectory[2 * i + 1] : rec.trajectory[i];
      }
      detail::svg_polyline(out, cv, xs, ys,
                           detail::series_color(rec.scenario.hp.algorithm));
    }
    detail::svg_legend(out, records);
  }

  out << "</svg>\n";

  std::ofstream file(path, std::ios::binary);
  if (!file) throw io_error("cannot open for writing: " + path.string());
  file << out.str();
  if (!file) throw io_error("write failed: " + path.string());
}

}  // namespace cadam
