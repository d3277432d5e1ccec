#pragma once

#include "matching.hpp"
#include "sequence.hpp"
#include "simulator.hpp"

namespace mrf {

/// c64 [T, rows, cols]; interleaf order, method and input hashes in the header.
void save_series(ImageSeries const &series, std::string const &path, Json extra_meta = Json::object());
auto load_series(std::string const &path) -> ImageSeries;

/// c64 [E, T] of unit-norm signals; t1/t2 lists, norm_scale and schedule hash in the header.
void save_dictionary(Dictionary const &dict, std::string const &path, Json extra_meta = Json::object());
auto load_dictionary(std::string const &path) -> Dictionary;

/// f32 [4, rows, cols]: t1, t2, m0, match mask.
void save_maps(QuantMaps const &maps, std::string const &path, Json extra_meta = Json::object());
auto load_maps(std::string const &path) -> QuantMaps;

} // namespace mrf
