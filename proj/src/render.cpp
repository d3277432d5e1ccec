#include "mrf/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mrf {

namespace {

auto compact(double v) -> std::string
{
  std::ostringstream s;
  s << v;
  return s.str();
}

} // namespace

auto windowed_pgm_path(std::string const &stem, double lo, double hi) -> std::string
{
  return stem + "_w" + compact(lo) + "_" + compact(hi) + ".pgm";
}

auto write_pgm(RealGrid const &image, std::string const &stem, double lo, double hi) -> std::string
{
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) { throw std::invalid_argument("PGM window needs finite lo < hi"); }
  auto const path = windowed_pgm_path(stem, lo, hi);
  std::ofstream f(path, std::ios::binary);
  if (!f) { throw std::runtime_error("cannot write " + path); }
  f << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  std::string row(static_cast<std::size_t>(image.cols()), '\0');
  for (Index r = 0; r < image.rows(); ++r) {
    for (Index c = 0; c < image.cols(); ++c) {
      double const u = std::clamp((image(r, c) - lo) / (hi - lo), 0.0, 1.0);
      row[static_cast<std::size_t>(c)] = static_cast<char>(static_cast<unsigned char>(std::lround(u * 255.0)));
    }
    f.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!f) { throw std::runtime_error("write failed: " + path); }
  return path;
}

void write_csv(RealGrid const &image, std::string const &path)
{
  std::ofstream f(path);
  if (!f) { throw std::runtime_error("cannot write " + path); }
  f.precision(std::numeric_limits<float>::max_digits10);
  for (Index r = 0; r < image.rows(); ++r) {
    for (Index c = 0; c < image.cols(); ++c) { f << (c ? "," : "") << image(r, c); }
    f << '\n';
  }
  if (!f) { throw std::runtime_error("write failed: " + path); }
}

} // namespace mrf
