#pragma once

#include <cstdint>
#include <optional>

#include "ckm/dataset.hpp"
#include "ckm/interpolate.hpp"
#include "ckm/postprocess.hpp"
#include "ckm/sampling.hpp"

namespace ckm {

struct PipelineOptions {
    double rate = 0.2;
    std::uint64_t seed = 0;
    ReconstructorConfig recon{};
    EstimateMode estimate = EstimateMode::robust;
    CfarConfig cfar{};
};

struct PipelineResult {
    SampleSet samples;
    EstimatedParams est;
    ExtractionResult extraction;
    GridMap recon;          // normalized
    DenormFit fit;
    bool fit_fallback = false;  // manifest bounds used
    GridMap iss_hat;        // watts
    GridMap sinr_hat;
    LocalizationResult loc;
    double iss_nmse_db = 0.0;
    double sinr_nmse_db = 0.0;
};

/// Sampling seed shared by all methods for a (run seed, scene, rate).
std::uint64_t sampling_seed(std::uint64_t run_seed, std::uint64_t scene_seed, double rate);

/// Samples, channel estimate and ISS extraction for one scene.
PipelineResult extract_stage(const LoadedScene& scene, const NormBounds& bounds, const PipelineOptions& opt);

/// Full chain: extraction, reconstruction (or `external_recon`), denormalization,
/// SINR estimate, CFAR and scores against the scene's truth.
PipelineResult run_pipeline(const LoadedScene& scene, const NormBounds& bounds, const PipelineOptions& opt,
                            const GridMap* external_recon = nullptr);

/// Finishes a result whose extraction and recon are set.
void finish_pipeline(PipelineResult& r, const LoadedScene& scene, const NormBounds& bounds,
                     const PipelineOptions& opt);

}  // namespace ckm
