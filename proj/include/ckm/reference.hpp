#pragma once

#include <span>
#include <vector>

#include "ckm/environment.hpp"
#include "ckm/interpolate.hpp"
#include "ckm/postprocess.hpp"
#include "ckm/propagation.hpp"

/// Serial, straightforward versions of the parallel kernels, used as test
/// oracles and benchmark baselines.
namespace ckm::reference {

BinaryMask los_map(const Environment& env, const Point3& tx);
SceneMaps build_scene_maps(const Scene& scene, bool realize_fading);
/// Brute-force nearest neighbors ordered by (distance, x, y).
std::vector<double> predict_knn(std::span<const Sample> samples, GridShape shape, int k);
std::vector<double> predict_idw(std::span<const Sample> samples, GridShape shape, double power);
LocalizationResult localize_ins(const GridMap& iss_map_db, const CfarConfig& cfg);

}  // namespace ckm::reference
