#pragma once

#include <string>
#include <vector>

#include "ckm/grid.hpp"
#include "ckm/io.hpp"
#include "ckm/sampling.hpp"

namespace ckm {

/// Gray level round(255·N(L(x))); normalized maps are used directly.
std::vector<std::uint8_t> gray_levels(const GridMap& map, const NormBounds& range);

/// Binary PGM (P5), rows = x.
std::string render_pgm(const GridMap& map, const NormBounds& range);

/// Binary PPM (P6) false-color view with true INs as dots and estimates as crosses.
std::string render_ppm(const GridMap& map, const NormBounds& range, const std::vector<Pixel>& truth,
                       const std::vector<Pixel>& estimated);

json render_legend(const GridMap& map, const NormBounds& range);

}  // namespace ckm
