#include "ckm/pipeline.hpp"

#include <cmath>

#include "ckm/metrics.hpp"
#include "ckm/rng.hpp"

namespace ckm {

std::uint64_t sampling_seed(std::uint64_t run_seed, std::uint64_t scene_seed, double rate) {
    return derive_seed(run_seed, scene_seed, static_cast<std::uint64_t>(std::llround(rate * 1e6)));
}

PipelineResult extract_stage(const LoadedScene& ls, const NormBounds& bounds, const PipelineOptions& opt) {
    const Scene& s = ls.scene;
    PipelineResult r;
    r.samples = draw_samples(ls.truth.total, opt.rate, sampling_seed(opt.seed, s.seed, opt.rate));
    EstimateOptions eo;
    eo.mode = opt.estimate;
    eo.dss = &ls.truth.dss;
    r.est = estimate_pathloss(r.samples, s.env, s.q_bs, s.p_bs, eo);
    r.extraction = extract_iss(r.samples, r.est, s.env, s.q_bs, s.p_bs, bounds);
    return r;
}

void finish_pipeline(PipelineResult& r, const LoadedScene& ls, const NormBounds& bounds, const PipelineOptions& opt) {
    try {
        r.fit = fit_denormalization(r.recon, r.extraction);
    } catch (const RankDeficientError&) {
        r.fit = {bounds.r_max_db, bounds.r_min_db, 0, 0.0};
        r.fit_fallback = true;
    }
    r.iss_hat = denormalize_map(r.recon, r.fit);
    r.sinr_hat = sinr_from_iss(r.iss_hat, r.extraction.dss_hat, ls.scene.noise_power);
    GridMap iss_db(r.iss_hat.shape(), MapKind::gain_db, 0.0, r.iss_hat.meta());
    for (std::size_t i = 0; i < iss_db.size(); ++i) iss_db[i] = to_db(r.iss_hat[i]);
    r.loc = localize_ins(iss_db, opt.cfar);
    r.iss_nmse_db = nmse_db(r.iss_hat, ls.truth.iss);
    r.sinr_nmse_db = nmse_db(r.sinr_hat, ls.truth.sinr);
}

PipelineResult run_pipeline(const LoadedScene& ls, const NormBounds& bounds, const PipelineOptions& opt,
                            const GridMap* external_recon) {
    PipelineResult r = extract_stage(ls, bounds, opt);
    if (external_recon) {
        if (external_recon->shape() != ls.scene.env.shape() || external_recon->kind() != MapKind::normalized)
            throw std::invalid_argument("run_pipeline: external reconstruction must be a normalized map of the scene grid");
        r.recon = *external_recon;
    } else {
        r.recon = reconstruct(r.extraction.preprocessed, r.samples.mask, opt.recon);
    }
    finish_pipeline(r, ls, bounds, opt);
    return r;
}

}  // namespace ckm
