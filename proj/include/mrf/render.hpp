#pragma once

#include "grid.hpp"

#include <string>

namespace mrf {

/// Path `<stem>_w<lo>_<hi>.pgm` encoding the display window.
auto windowed_pgm_path(std::string const &stem, double lo, double hi) -> std::string;

/// 8-bit binary PGM; values are mapped linearly from [lo, hi] to [0, 255] and clipped.
/// Returns the written path.
auto write_pgm(RealGrid const &image, std::string const &stem, double lo, double hi) -> std::string;

/// One CSV row per image row, full float precision.
void write_csv(RealGrid const &image, std::string const &path);

} // namespace mrf
