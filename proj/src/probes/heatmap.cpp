#include <algorithm>
#include <cmath>
#include <string>

#include "pelab/errors.hpp"
#include "pelab/fileio.hpp"
#include "pelab/probes.hpp"

namespace pelab::probes {

std::vector<unsigned char> heatmap_ppm(const WeightMatrix& m, std::size_t scale) {
  if (m.size() == 0) throw ValidationError("cannot render an empty matrix");
  if (scale == 0) throw ValidationError("heatmap scale must be >= 1");
  const auto [lo_it, hi_it] = std::minmax_element(m.values().begin(), m.values().end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;

  const std::size_t side = m.size() * scale;
  const std::string header = "P6\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(header.size() + side * side * 3);
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::vector<unsigned char> line;
    line.reserve(side * 3);
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double t = range > 0.0 ? (m(i, j) - lo) / range : 0.0;
      const auto blue = static_cast<unsigned char>(std::lround(255.0 * t));
      const auto red = static_cast<unsigned char>(255 - blue);
      for (std::size_t r = 0; r < scale; ++r) {
        line.push_back(red);
        line.push_back(0);
        line.push_back(blue);
      }
    }
    for (std::size_t r = 0; r < scale; ++r) out.insert(out.end(), line.begin(), line.end());
  }
  return out;
}

void render_heatmap(const WeightMatrix& m, const std::filesystem::path& path, std::size_t scale) {
  write_binary_file(path, heatmap_ppm(m, scale));
}

}  // namespace pelab::probes
