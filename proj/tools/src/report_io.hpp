#pragma once

#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace ldpx::cli {

using Cell = std::variant<double, long long, std::string>;

/// RFC-4180 CSV with two comment lines on top: a timestamp (the only line that may
/// differ between identical runs) and the config hash. Reals are written as %.16e.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& command, const std::string& config_hash,
            std::vector<std::string> columns);
  void row(const std::vector<Cell>& cells);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::size_t width_;
  std::ofstream out_;
};

std::string format_real(double v);
std::string quote(const std::string& field);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  /// Dashed horizontal reference line instead of a polyline through the points.
  bool reference = false;
};

/// Minimal self-contained SVG line plot.
void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<Series>& series);

}  // namespace ldpx::cli
