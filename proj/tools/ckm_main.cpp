#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ckm/commands.hpp"

namespace {

using namespace ckm;

struct ReconFlags {
    std::string method = "idw";
    std::string rbf_kernel = "gaussian";
    std::string variogram = "exponential";
    std::string estimate = "robust";
};

void add_dataset_flags(CLI::App* app, ReconstructSpec& s) {
    app->add_option("--dataset", s.dataset, "Dataset directory (holds manifest.json)")->required()->envname("CKM_DATASET");
    app->add_option("--out", s.out, "Output directory")->required()->envname("CKM_OUT");
    app->add_option("--split", s.split, "train, val, test or all")->envname("CKM_SPLIT");
    app->add_option("--limit", s.limit, "Process only the first N scenes of the split")->check(CLI::NonNegativeNumber);
    app->add_option("--rate", s.rate, "Sampling rate in (0, 1]")->envname("CKM_RATE");
    app->add_option("--seed", s.seed, "Run seed for the sampling masks")->envname("CKM_SEED");
    app->add_option("--workers", s.workers, "Scene worker threads")->check(CLI::PositiveNumber)->envname("CKM_WORKERS");
}

CLI::Option* add_method_flags(CLI::App* app, ReconstructSpec& s, ReconFlags& f) {
    auto* method = app->add_option("--method", f.method, "knn, idw, rbf or kriging")->envname("CKM_METHOD");
    app->add_option("--knn-k", s.recon.knn_k, "Neighbors for knn");
    app->add_option("--idw-power", s.recon.idw_power, "Distance power for idw");
    app->add_option("--rbf-kernel", f.rbf_kernel, "gaussian, thin_plate or multiquadric");
    app->add_option("--rbf-shape", s.recon.rbf_shape, "RBF shape in pixels (0 = automatic)");
    app->add_option("--variogram", f.variogram, "exponential or spherical");
    app->add_option("--regularization", s.recon.regularization, "Diagonal regularization for rbf/kriging");
    app->add_option("--estimate", f.estimate, "Channel estimate: robust or oracle");
    return method;
}

void resolve(ReconstructSpec& s, const ReconFlags& f) {
    s.recon.method = method_from_string(f.method);
    s.recon.rbf_kernel = rbf_kernel_from_string(f.rbf_kernel);
    s.recon.variogram = variogram_from_string(f.variogram);
    if (f.estimate == "robust") s.estimate = EstimateMode::robust;
    else if (f.estimate == "oracle") s.estimate = EstimateMode::oracle;
    else throw std::invalid_argument("--estimate must be robust or oracle");
}

void add_cfar_flags(CLI::App* app, CfarConfig& c) {
    app->add_option("--cfar-guard", c.guard, "CFAR guard radius (cells)")->envname("CKM_CFAR_GUARD");
    app->add_option("--cfar-train", c.train, "CFAR training ring width (cells)")->envname("CKM_CFAR_TRAIN");
    app->add_option("--cfar-pfa", c.pfa, "CFAR false-alarm probability")->envname("CKM_CFAR_PFA");
}

NormBounds parse_range(const std::string& s) {
    NormBounds b;
    char comma = 0;
    std::istringstream is(s);
    if (!(is >> b.r_min_db >> comma >> b.r_max_db) || comma != ',')
        throw std::invalid_argument("--render-range-db expects MIN,MAX in dB");
    b.validate();
    return b;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interference-aware channel knowledge map construction"};
    app.require_subcommand(1);

    GenDatasetSpec gen;
    std::uint64_t gen_seed = 0;
    int gen_workers = 1;
    bool no_fading = false;
    auto* g = app.add_subcommand("gen-dataset", "Generate scenes, ground-truth maps and manifest");
    g->add_option("--out", gen.out, "Dataset directory")->required()->envname("CKM_OUT");
    g->add_option("--seed", gen_seed, "Master seed")->envname("CKM_SEED");
    g->add_option("--workers", gen_workers, "Scene worker threads")->check(CLI::PositiveNumber)->envname("CKM_WORKERS");
    g->add_option("--train", gen.config.n_train, "Training scenes")->check(CLI::PositiveNumber);
    g->add_option("--val", gen.config.n_val, "Validation scenes")->check(CLI::NonNegativeNumber);
    g->add_option("--test", gen.config.n_test, "Test scenes")->check(CLI::NonNegativeNumber);
    g->add_option("--length-m", gen.config.env.length_m, "Scene length L (m)");
    g->add_option("--width-m", gen.config.env.width_m, "Scene width W (m)");
    g->add_option("--in-powers", gen.config.in_powers, "IN transmit powers (W)")->delimiter(',');
    g->add_flag("--no-fading", no_fading, "Disable shadowing and fading");

    ReconstructSpec rec;
    ReconFlags rec_f;
    auto* r = app.add_subcommand("reconstruct", "Reconstruct normalized ISS maps with a classical interpolator");
    add_dataset_flags(r, rec);
    add_method_flags(r, rec, rec_f);
    r->add_flag("--save-extraction", rec.save_extraction, "Also write preprocessed samples and masks");

    LocalizeSpec loc;
    ReconFlags loc_f;
    std::string loc_est;
    auto* l = app.add_subcommand("localize", "Detect INs with 2D-CFAR");
    add_dataset_flags(l, loc.base);
    auto* loc_method = add_method_flags(l, loc.base, loc_f);
    auto* loc_est_opt = l->add_option("--estimates", loc_est, "Directory of <id>.map normalized reconstructions");
    auto* loc_gt = l->add_flag("--ground-truth", loc.ground_truth, "Run CFAR on the true ISS maps");
    loc_est_opt->excludes(loc_method)->excludes(loc_gt);
    loc_gt->excludes(loc_method);
    add_cfar_flags(l, loc.cfar);

    EvaluateSpec ev;
    ReconFlags ev_f;
    std::string ev_est;
    std::vector<double> ev_rates;
    std::vector<std::string> ev_methods;
    auto* e = app.add_subcommand("evaluate", "Score reconstruction, SINR and localization across rates and methods");
    add_dataset_flags(e, ev.base);
    add_method_flags(e, ev.base, ev_f);
    auto* ev_rates_opt = e->add_option("--rates", ev_rates, "Sampling rates to sweep")->delimiter(',');
    auto* ev_methods_opt = e->add_option("--methods", ev_methods, "Methods to sweep")->delimiter(',');
    auto* ev_est_opt = e->add_option("--estimates", ev_est, "Directory of <id>.map or <id>/rin.map estimates");
    ev_est_opt->excludes(ev_rates_opt)->excludes(ev_methods_opt);
    add_cfar_flags(e, ev.cfar);

    RenderSpec ren;
    std::string ren_range, ren_dataset, ren_color, ren_ins, ren_det;
    auto* v = app.add_subcommand("render", "Render a map as PGM (and optional false-color PPM)");
    v->add_option("--input", ren.input, "Map file")->required();
    v->add_option("--out", ren.out, "Output .pgm")->required()->envname("CKM_OUT");
    v->add_option("--dataset", ren_dataset, "Dataset whose norm_bounds set the dB range")->envname("CKM_DATASET");
    v->add_option("--render-range-db", ren_range, "MIN,MAX dB range")->envname("CKM_RENDER_RANGE_DB");
    v->add_option("--color", ren_color, "Output false-color .ppm");
    v->add_option("--ins", ren_ins, "ins.csv with true IN pixels (dots)");
    v->add_option("--detections", ren_det, "localization.csv with estimates (crosses)");
    v->add_option("--scene", ren.scene, "Scene id filter for --detections");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    return guarded([&]() -> int {
        if (*g) {
            gen.config.master_seed = gen_seed;
            gen.config.workers = gen_workers;
            gen.config.fading = !no_fading;
            return cmd_gen_dataset(gen);
        }
        if (*r) {
            resolve(rec, rec_f);
            return cmd_reconstruct(rec);
        }
        if (*l) {
            resolve(loc.base, loc_f);
            if (!loc_est.empty()) loc.estimates = loc_est;
            return cmd_localize(loc);
        }
        if (*e) {
            resolve(ev.base, ev_f);
            if (!ev_rates.empty()) ev.rates = ev_rates;
            if (!ev_methods.empty()) {
                ev.methods.clear();
                for (const auto& m : ev_methods) ev.methods.push_back(method_from_string(m));
            }
            if (!ev_est.empty()) ev.estimates = ev_est;
            return cmd_evaluate(ev);
        }
        if (!ren_range.empty()) ren.range_db = parse_range(ren_range);
        if (!ren_dataset.empty()) ren.dataset = ren_dataset;
        if (!ren_color.empty()) ren.color_out = ren_color;
        if (!ren_ins.empty()) ren.ins_csv = ren_ins;
        if (!ren_det.empty()) ren.detections_csv = ren_det;
        return cmd_render(ren);
    });
}
