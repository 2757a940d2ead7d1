#pragma once

#include <vector>

#include "ckm/grid.hpp"
#include "ckm/postprocess.hpp"

namespace ckm {

/// Mean over pixels of (dB(estimate) − dB(truth))². Power kinds are converted
/// with the 1e−20 W floor; gain_db maps are used as-is.
double nmse_db(const GridMap& estimate, const GridMap& truth);

struct Coord2 {
    double x = 0.0;
    double y = 0.0;
};

struct LocalizationScore {
    double mean_error_px = 0.0;  // mean over scored scenes
    std::size_t scored = 0;      // scenes with at least one detection
    std::size_t missed = 0;      // scenes with no detection
};

/// Per scene: mean over detections of the distance to the nearest truth;
/// averaged over scenes with detections. Throws on an empty truth set.
LocalizationScore localization_error(const std::vector<LocalizationResult>& detections,
                                     const std::vector<std::vector<Pixel>>& truths);
LocalizationScore localization_error(const std::vector<std::vector<Coord2>>& detections,
                                     const std::vector<std::vector<Coord2>>& truths);

}  // namespace ckm
