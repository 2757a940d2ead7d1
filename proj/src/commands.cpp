#include "ckm/commands.hpp"

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <sstream>

#include "ckm/metrics.hpp"
#include "ckm/pipeline.hpp"
#include "ckm/render.hpp"

namespace ckm {

namespace fs = std::filesystem;

namespace {

template <class F>
void parallel_scenes(std::size_t n, int workers, F&& f) {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers))
    for (std::size_t i = 0; i < n; ++i) {
        try {
            f(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void check_rate(double rate) {
    if (!(rate > 0.0) || rate > 1.0) throw std::invalid_argument("--rate must be in (0, 1]");
}

GridMap db_map(const GridMap& watts) {
    GridMap out(watts.shape(), MapKind::gain_db, 0.0, watts.meta());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_db(watts[i]);
    return out;
}

json recon_header(const ReconstructSpec& s, const ReconstructorConfig& cfg, double rate) {
    json h = {{"method", to_string(cfg.method)}, {"rate", rate}, {"run_seed", s.seed}};
    if (cfg.method == Method::knn) h["knn_k"] = cfg.knn_k;
    if (cfg.method == Method::idw) h["idw_power"] = cfg.idw_power;
    if (cfg.method == Method::rbf) h["rbf_kernel"] = to_string(cfg.rbf_kernel);
    if (cfg.method == Method::kriging) h["variogram"] = to_string(cfg.variogram);
    return h;
}

GridMap read_normalized(const fs::path& p, const GridShape& shape) {
    GridMap m = read_map(p).map;
    if (m.kind() != MapKind::normalized) throw IoError(p.string() + ": expected a normalized map");
    if (m.shape() != shape) throw IoError(p.string() + ": grid does not match the scene");
    return m;
}

std::string detections_csv(const std::vector<std::string>& ids, const std::vector<LocalizationResult>& locs) {
    std::string out = "scene_id,det_idx,x_px,y_px,score_db\n";
    for (std::size_t k = 0; k < ids.size(); ++k)
        for (std::size_t d = 0; d < locs[k].detections.size(); ++d) {
            const auto& det = locs[k].detections[d];
            out += ids[k] + "," + std::to_string(d) + "," + std::to_string(det.coord.x) + "," +
                   std::to_string(det.coord.y) + "," + fmt(det.score_db) + "\n";
        }
    return out;
}

}  // namespace

std::vector<SceneEntry> select_scenes(const DatasetManifest& m, const std::string& split, int limit) {
    if (split != "train" && split != "val" && split != "test" && split != "all")
        throw std::invalid_argument("--split must be train, val, test or all");
    std::vector<SceneEntry> out;
    for (const auto& s : m.scenes)
        if (split == "all" || s.split == split) out.push_back(s);
    if (limit > 0 && static_cast<int>(out.size()) > limit) out.resize(limit);
    if (out.empty()) throw std::invalid_argument("no scenes in split '" + split + "'");
    return out;
}

int cmd_gen_dataset(const GenDatasetSpec& spec) {
    spec.config.validate();
    const DatasetManifest m = generate_dataset(spec.config, spec.out);
    std::cout << "dataset " << spec.out.string() << ": " << m.count("train") << "/" << m.count("val") << "/"
              << m.count("test") << " scenes, norm_bounds [" << fmt(m.norm_bounds.r_min_db) << ", "
              << fmt(m.norm_bounds.r_max_db) << "] dB, hash " << m.dataset_hash << "\n";
    return kExitOk;
}

int cmd_reconstruct(const ReconstructSpec& spec) {
    check_rate(spec.rate);
    spec.recon.validate();
    const DatasetManifest m = load_manifest(spec.dataset);
    const auto scenes = select_scenes(m, spec.split, spec.limit);
    fs::create_directories(spec.out);
    PipelineOptions opt;
    opt.rate = spec.rate;
    opt.seed = spec.seed;
    opt.recon = spec.recon;
    opt.estimate = spec.estimate;

    std::vector<std::string> rows(scenes.size());
    parallel_scenes(scenes.size(), spec.workers, [&](std::size_t i) {
        const LoadedScene ls = load_scene(spec.dataset, m, scenes[i]);
        PipelineResult r = extract_stage(ls, m.norm_bounds, opt);
        GridMap recon = reconstruct(r.extraction.preprocessed, r.samples.mask, spec.recon);
        recon.meta() = {ls.scene.seed, ls.scene.id};
        write_map(spec.out / (ls.scene.id + ".map"), recon, recon_header(spec, spec.recon, spec.rate));
        if (spec.save_extraction) {
            const fs::path d = spec.out / "extraction" / ls.scene.id;
            const MapMeta meta{ls.scene.seed, ls.scene.id};
            const json extra = {{"rate", spec.rate}, {"run_seed", spec.seed}};
            auto put = [&](const char* name, GridMap g) {
                g.meta() = meta;
                write_map(d / name, g, extra);
            };
            put("preprocessed.map", r.extraction.preprocessed);
            put("iss_sparse.map", r.extraction.iss_sparse);
            put("dss_hat.map", r.extraction.dss_hat);
            write_file(d / "neg_mask.map", encode_mask(r.extraction.neg_mask, meta, extra));
            write_file(d / "sample_mask.map", encode_mask(r.samples.mask, meta, extra));
        }
        const auto& e = r.est;
        const double neg = static_cast<double>(r.extraction.neg_mask.count()) /
                           static_cast<double>(std::max<std::size_t>(1, r.samples.mask.count()));
        rows[i] = ls.scene.id + "," + fmt(e.alpha_hat_los) + "," + fmt(e.beta_hat_los) + "," + fmt(e.alpha_hat_nlos) +
                  "," + fmt(e.beta_hat_nlos) + "," + fmt(e.residual_rms) + "," + std::to_string(e.n_los) + "," +
                  std::to_string(e.n_nlos) + "," + fmt(neg) + "\n";
    });
    std::string csv = "scene_id,alpha_los,beta_los,alpha_nlos,beta_nlos,residual_rms_db,n_los,n_nlos,neg_fraction\n";
    for (const auto& r : rows) csv += r;
    write_file(spec.out / "channel_estimates.csv", csv);
    std::cout << "reconstructed " << scenes.size() << " scenes with " << to_string(spec.recon.method) << " at rate "
              << fmt(spec.rate) << " into " << spec.out.string() << "\n";
    return kExitOk;
}

int cmd_localize(const LocalizeSpec& spec) {
    const ReconstructSpec& b = spec.base;
    check_rate(b.rate);
    b.recon.validate();
    spec.cfar.validate();
    if (spec.ground_truth && spec.estimates) throw std::invalid_argument("--ground-truth and --estimates are exclusive");
    const DatasetManifest m = load_manifest(b.dataset);
    const auto scenes = select_scenes(m, b.split, b.limit);
    PipelineOptions opt;
    opt.rate = b.rate;
    opt.seed = b.seed;
    opt.recon = b.recon;
    opt.estimate = b.estimate;
    opt.cfar = spec.cfar;

    std::vector<std::string> ids(scenes.size());
    std::vector<LocalizationResult> locs(scenes.size());
    std::vector<std::vector<Pixel>> truths(scenes.size());
    parallel_scenes(scenes.size(), b.workers, [&](std::size_t i) {
        const LoadedScene ls = load_scene(b.dataset, m, scenes[i]);
        ids[i] = ls.scene.id;
        truths[i] = ls.in_pixels;
        if (spec.ground_truth) {
            locs[i] = localize_ins(db_map(ls.truth.iss), spec.cfar);
        } else if (spec.estimates) {
            const GridMap ext = read_normalized(*spec.estimates / (ls.scene.id + ".map"), ls.scene.env.shape());
            locs[i] = run_pipeline(ls, m.norm_bounds, opt, &ext).loc;
        } else {
            locs[i] = run_pipeline(ls, m.norm_bounds, opt).loc;
        }
    });
    fs::create_directories(b.out);
    write_file(b.out / "localization.csv", detections_csv(ids, locs));
    const LocalizationScore score = localization_error(locs, truths);
    const json summary = {{"mean_error_px", score.mean_error_px},
                          {"mean_error_m", score.mean_error_px * m.config.env.resolution_m},
                          {"scored_scenes", score.scored},
                          {"missed_scenes", score.missed},
                          {"cfar", {{"guard", spec.cfar.guard}, {"train", spec.cfar.train}, {"pfa", spec.cfar.pfa}}}};
    write_file(b.out / "localization.json", summary.dump(2) + "\n");
    std::cout << "localized " << scenes.size() << " scenes: mean error " << fmt(score.mean_error_px) << " px, "
              << score.missed << " scenes without detections\n";
    return kExitOk;
}

int cmd_evaluate(const EvaluateSpec& spec) {
    const ReconstructSpec& b = spec.base;
    spec.cfar.validate();
    b.recon.validate();
    const DatasetManifest m = load_manifest(b.dataset);
    const auto scenes = select_scenes(m, b.split, b.limit);
    const std::vector<double> rates = spec.estimates ? std::vector<double>{b.rate} : spec.rates;
    for (double r : rates) check_rate(r);
    std::vector<std::string> labels;
    if (spec.estimates) {
        labels.push_back("external");
    } else {
        if (spec.methods.empty()) throw std::invalid_argument("no methods to evaluate");
        for (auto mth : spec.methods) labels.emplace_back(to_string(mth));
    }

    struct SceneScore {
        double iss = 0, sinr = 0;
        LocalizationResult loc;
    };
    std::string agg_csv = "rate,method,metric,value\n";
    std::string scene_csv = "rate,method,scene_id,iss_nmse_db,sinr_nmse_db,m_hat,loc_error_px\n";
    json report = json::array();

    std::vector<LoadedScene> loaded(scenes.size());
    parallel_scenes(scenes.size(), b.workers, [&](std::size_t i) { loaded[i] = load_scene(b.dataset, m, scenes[i]); });

    for (double rate : rates) {
        for (std::size_t mi = 0; mi < labels.size(); ++mi) {
            PipelineOptions opt;
            opt.rate = rate;
            opt.seed = b.seed;
            opt.recon = b.recon;
            if (!spec.estimates) opt.recon.method = spec.methods[mi];
            opt.estimate = b.estimate;
            opt.cfar = spec.cfar;

            std::vector<SceneScore> res(scenes.size());
            parallel_scenes(scenes.size(), b.workers, [&](std::size_t i) {
                const LoadedScene& ls = loaded[i];
                SceneScore& s = res[i];
                if (!spec.estimates) {
                    const PipelineResult r = run_pipeline(ls, m.norm_bounds, opt);
                    s = {r.iss_nmse_db, r.sinr_nmse_db, r.loc};
                    return;
                }
                const fs::path norm = *spec.estimates / (ls.scene.id + ".map");
                const fs::path watts = *spec.estimates / ls.scene.id / "rin.map";
                if (fs::exists(norm)) {
                    const GridMap ext = read_normalized(norm, ls.scene.env.shape());
                    const PipelineResult r = run_pipeline(ls, m.norm_bounds, opt, &ext);
                    s = {r.iss_nmse_db, r.sinr_nmse_db, r.loc};
                } else if (fs::exists(watts)) {
                    const GridMap iss = read_map(watts).map;
                    if (iss.kind() != MapKind::rss_watts || iss.shape() != ls.scene.env.shape())
                        throw IoError(watts.string() + ": expected an RSS map on the scene grid");
                    const fs::path sinr_path = *spec.estimates / ls.scene.id / "sinr.map";
                    GridMap sinr;
                    if (fs::exists(sinr_path)) {
                        sinr = read_map(sinr_path).map;
                    } else {
                        sinr = sinr_from_iss(iss, extract_stage(ls, m.norm_bounds, opt).extraction.dss_hat,
                                             ls.scene.noise_power);
                    }
                    s = {nmse_db(iss, ls.truth.iss), nmse_db(sinr, ls.truth.sinr),
                         localize_ins(db_map(iss), spec.cfar)};
                } else {
                    throw IoError("no estimate for scene " + ls.scene.id + " under " + spec.estimates->string());
                }
            });

            double iss = 0, sinr = 0, mhat = 0;
            std::vector<LocalizationResult> locs;
            std::vector<std::vector<Pixel>> truths;
            std::map<std::size_t, std::size_t> hist;
            for (std::size_t i = 0; i < res.size(); ++i) {
                iss += res[i].iss;
                sinr += res[i].sinr;
                mhat += static_cast<double>(res[i].loc.m_hat());
                ++hist[res[i].loc.m_hat()];
                locs.push_back(res[i].loc);
                truths.push_back(loaded[i].in_pixels);
                const double e =
                    res[i].loc.m_hat() > 0 ? localization_error({res[i].loc}, {loaded[i].in_pixels}).mean_error_px : NAN;
                scene_csv += fmt(rate) + "," + labels[mi] + "," + loaded[i].scene.id + "," + fmt(res[i].iss) + "," +
                             fmt(res[i].sinr) + "," + std::to_string(res[i].loc.m_hat()) + "," +
                             (std::isnan(e) ? std::string("") : fmt(e)) + "\n";
            }
            const double n = static_cast<double>(res.size());
            const LocalizationScore loc = localization_error(locs, truths);
            const std::vector<std::pair<std::string, double>> metrics{
                {"iss_nmse_db", iss / n},
                {"sinr_nmse_db", sinr / n},
                {"loc_error_px", loc.mean_error_px},
                {"loc_missed_scenes", static_cast<double>(loc.missed)},
                {"m_hat_mean", mhat / n}};
            for (const auto& [k, v] : metrics) agg_csv += fmt(rate) + "," + labels[mi] + "," + k + "," + fmt(v) + "\n";
            json h = json::object();
            for (const auto& [k, c] : hist) h[std::to_string(k)] = c;
            report.push_back({{"rate", rate},
                              {"method", labels[mi]},
                              {"scenes", res.size()},
                              {"iss_nmse_db", iss / n},
                              {"sinr_nmse_db", sinr / n},
                              {"loc_error_px", loc.mean_error_px},
                              {"loc_scored_scenes", loc.scored},
                              {"loc_missed_scenes", loc.missed},
                              {"m_hat_histogram", h}});
        }
    }
    fs::create_directories(b.out);
    write_file(b.out / "eval.csv", agg_csv);
    write_file(b.out / "eval_scenes.csv", scene_csv);
    write_file(b.out / "eval.json",
               json{{"split", b.split}, {"run_seed", b.seed}, {"metric_note", "NMSE is the MSE of dB values"},
                    {"results", report}}
                       .dump(2) +
                   "\n");
    std::cout << "evaluated " << scenes.size() << " scenes x " << rates.size() << " rates x " << labels.size()
              << " methods into " << b.out.string() << "\n";
    return kExitOk;
}

int cmd_render(const RenderSpec& spec) {
    const DecodedMap in = read_map(spec.input);
    NormBounds range{};
    if (spec.range_db) {
        range = *spec.range_db;
        range.validate();
    } else if (spec.dataset) {
        range = load_manifest(*spec.dataset).norm_bounds;
    } else if (in.map.kind() != MapKind::normalized) {
        throw std::invalid_argument("render needs --render-range-db or --dataset for non-normalized maps");
    } else {
        range = {0.0, 1.0};
    }
    write_file(spec.out, render_pgm(in.map, range));
    json legend = render_legend(in.map, range);
    legend["gray_image"] = spec.out.filename().string();
    if (spec.color_out) {
        std::vector<Pixel> truth, est;
        if (spec.ins_csv) {
            std::istringstream is(read_file(*spec.ins_csv));
            std::string line;
            std::getline(is, line);
            while (std::getline(is, line)) {
                int m, x, y;
                if (std::sscanf(line.c_str(), "%d,%d,%d", &m, &x, &y) == 3) truth.push_back({x, y});
            }
        }
        if (spec.detections_csv) {
            std::istringstream is(read_file(*spec.detections_csv));
            std::string line;
            std::getline(is, line);
            while (std::getline(is, line)) {
                const auto comma = line.find(',');
                if (comma == std::string::npos) continue;
                if (!spec.scene.empty() && line.substr(0, comma) != spec.scene) continue;
                int d, x, y;
                if (std::sscanf(line.c_str() + comma + 1, "%d,%d,%d", &d, &x, &y) == 3) est.push_back({x, y});
            }
        }
        write_file(*spec.color_out, render_ppm(in.map, range, truth, est));
        legend["color_image"] = spec.color_out->filename().string();
        legend["true_in_count"] = truth.size();
        legend["estimated_in_count"] = est.size();
    }
    fs::path legend_path = spec.out;
    legend_path.replace_extension(".legend.json");
    write_file(legend_path, legend.dump(2) + "\n");
    return kExitOk;
}

int guarded(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const IoError& e) {
        std::cerr << "ckm: I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "ckm: I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "ckm: usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "ckm: numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace ckm
