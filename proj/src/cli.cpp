#include "camref/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "camref/canny.hpp"
#include "camref/grid_search.hpp"
#include "camref/image.hpp"
#include "camref/manifest.hpp"
#include "camref/metrics.hpp"
#include "camref/parallel.hpp"
#include "camref/perimeter_fit.hpp"
#include "camref/superpixels.hpp"
#include "camref/synth.hpp"
#include "json.hpp"

namespace camref::cli {

namespace {

struct CommonOpts {
    int workers = 1;
    uint64_t seed = 0;
    std::string config;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--workers", opts.workers, "Worker threads (affects wall time only)")
        ->check(CLI::Range(1, 256));
    cmd->add_option("--seed", opts.seed, "RNG seed");
    cmd->add_option("--config", opts.config, "JSON config file (CLI flags win over file values)");
}

struct SimplifyOptGroup {
    std::string method = "slic";
    SimplifyParams params;

    void add(CLI::App* cmd) {
        cmd->add_option("--method", method, "slic | quickshift");
        cmd->add_option("--q", params.q, "Maximum cluster count");
        cmd->add_option("--slic-k", params.slic_k, "SLIC seed count");
        cmd->add_option("--compactness", params.slic_compactness, "SLIC compactness");
        cmd->add_option("--iters", params.slic_iters, "SLIC iterations");
        cmd->add_option("--kernel-size", params.qs_kernel_size, "Quickshift kernel bandwidth");
        cmd->add_option("--max-dist", params.qs_max_dist, "Quickshift linking distance");
    }
    SimplifyParams resolved(uint64_t seed) const {
        SimplifyParams p = params;
        p.method = simplify_method_from_string(method);
        p.rng_seed = seed;
        return p;
    }
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["method"] = method;
        j["q"] = params.q;
        j["slic_k"] = params.slic_k;
        j["compactness"] = params.slic_compactness;
        j["iters"] = params.slic_iters;
        j["kernel_size"] = params.qs_kernel_size;
        j["max_dist"] = params.qs_max_dist;
        return j;
    }
};

struct CannyOptGroup {
    CannyParams params;
    std::string gray = "luma";

    void add(CLI::App* cmd) {
        cmd->add_option("--sigma", params.sigma, "Gaussian sigma");
        cmd->add_option("--low", params.low, "Low hysteresis fraction of max magnitude");
        cmd->add_option("--high", params.high, "High hysteresis fraction of max magnitude");
        cmd->add_option("--gray", gray, "luma | lab_l");
    }
    CannyParams resolved() const {
        CannyParams p = params;
        if (gray == "luma")
            p.gray = GrayMode::luma;
        else if (gray == "lab_l")
            p.gray = GrayMode::lab_l;
        else
            throw CLI::ValidationError("--gray", "expected luma or lab_l");
        return p;
    }
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["sigma"] = params.sigma;
        j["low"] = params.low;
        j["high"] = params.high;
        j["gray"] = gray;
        return j;
    }
};

struct RefineOptGroup {
    RefineParams params;
    std::string fusion = "union";

    void add(CLI::App* cmd) {
        cmd->add_option("--t-slic", params.threshold_slic, "Threshold for the SLIC variant");
        cmd->add_option("--t-quick", params.threshold_quick, "Threshold for the Quickshift variant");
        cmd->add_option("--fusion", fusion, "union | intersection | slic_only | quick_only");
    }
    RefineParams resolved() const {
        RefineParams p = params;
        p.fusion = fusion_from_string(fusion);
        return p;
    }
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["t_slic"] = params.threshold_slic;
        j["t_quick"] = params.threshold_quick;
        j["fusion"] = fusion;
        return j;
    }
};

nlohmann::json common_json(const std::string& subcommand, const CommonOpts& opts) {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["workers"] = opts.workers;
    j["seed"] = opts.seed;
    return j;
}

void write_run_header(const std::string& path, const nlohmann::json& j) {
    atomic_write_file(path, j.dump(2) + "\n");
}

// Config file support: JSON keys are long option names; values become
// synthetic tokens injected ahead of the real CLI arguments, so explicit
// flags take precedence via the take-last policy.
std::vector<std::string> config_tokens(const std::string& config_path) {
    nlohmann::json j = nlohmann::json::parse(read_file(config_path));
    if (!j.is_object()) throw std::runtime_error(config_path + ": config must be a JSON object");
    std::vector<std::string> tokens;
    for (auto& [key, val] : j.items()) {
        tokens.push_back("--" + key);
        if (val.is_string())
            tokens.push_back(val.get<std::string>());
        else
            tokens.push_back(val.dump());
    }
    return tokens;
}

std::string find_config(const std::vector<std::string>& args) {
    for (size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--config") return args[i + 1];
    for (const std::string& a : args)
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    return {};
}

int parse_and_dispatch(CLI::App& app, const std::vector<std::string>& args) {
    // Inject config-file tokens right after the subcommand name.
    std::vector<std::string> full = args;
    std::string config = find_config(args);
    if (!config.empty() && !full.empty()) {
        std::vector<std::string> injected = config_tokens(config);
        full.insert(full.begin() + 1, injected.begin(), injected.end());
    }
    std::vector<const char*> argv;
    argv.push_back("camrefine");
    for (const std::string& a : full) argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    return 0;
}

// ---- subcommand bodies -------------------------------------------------------

void cmd_synth(const CommonOpts& common, const SynthSpec& spec, const std::string& out_dir) {
    SynthSpec s = spec;
    s.rng_seed = common.seed;
    synth_generate(s, out_dir);
    nlohmann::json j = common_json("synth", common);
    j["image_count"] = s.image_count;
    j["image_size"] = s.image_size;
    j["max_shapes"] = s.max_shapes;
    j["texture_amplitude"] = s.texture_amplitude;
    j["cam_blur_sigma"] = s.cam_blur_sigma;
    j["distractor_blob_count"] = s.distractor_blob_count;
    j["out"] = out_dir;
    write_run_header(out_dir + "/run.json", j);
}

void cmd_simplify(const CommonOpts& common, const SimplifyOptGroup& sopts, const std::string& image,
                  const std::string& out, const std::string& flat_out) {
    RasterImage img = load_ppm(image);
    SegmentMap seg = simplify(img, sopts.resolved(common.seed));
    save_segment_map(seg, out);
    if (!flat_out.empty()) save_ppm(flatten(img, seg), flat_out);
    nlohmann::json j = common_json("simplify", common);
    j["simplify"] = sopts.to_json();
    j["image"] = image;
    j["out"] = out;
    write_run_header(out + ".run.json", j);
}

void cmd_edges(const CommonOpts& common, const CannyOptGroup& copts, const std::string& image,
               const std::string& out) {
    PerimeterMap pm = canny(load_ppm(image), copts.resolved());
    save_perimeter_map(pm, out);
    nlohmann::json j = common_json("edges", common);
    j["canny"] = copts.to_json();
    j["image"] = image;
    j["out"] = out;
    write_run_header(out + ".run.json", j);
}

void cmd_perimeter(const CommonOpts& common, const SimplifyOptGroup& sopts,
                   const CannyOptGroup& copts, const std::string& image, const std::string& out) {
    PerimeterMap pm = build_perimeter_map(load_ppm(image), sopts.resolved(common.seed),
                                          copts.resolved());
    save_perimeter_map(pm, out);
    nlohmann::json j = common_json("perimeter", common);
    j["simplify"] = sopts.to_json();
    j["canny"] = copts.to_json();
    j["image"] = image;
    j["out"] = out;
    write_run_header(out + ".run.json", j);
}

void cmd_refine(const CommonOpts& common, const SimplifyOptGroup& sopts, const CannyOptGroup& copts,
                const RefineOptGroup& ropts, const std::string& manifest_path,
                const std::string& outdir) {
    Manifest manifest = load_manifest(manifest_path);
    SimplifyParams base = sopts.resolved(common.seed);
    CannyParams cp = copts.resolved();
    RefineParams rp = ropts.resolved();
    std::filesystem::create_directories(outdir);

    parallel_for(manifest.entries.size(), common.workers, [&](size_t i) {
        const ManifestEntry& e = manifest.entries[i];
        RasterImage img = load_ppm(e.image_path);
        ScoreMap scores = load_smf(e.score_path);
        SimplifyParams sp = base;
        PerimeterMap pm_slic, pm_quick;
        if (rp.fusion != FusionMode::quick_only) {
            sp.method = SimplifyMethod::slic;
            pm_slic = build_perimeter_map(img, sp, cp);
        }
        if (rp.fusion != FusionMode::slic_only) {
            sp.method = SimplifyMethod::quickshift;
            pm_quick = build_perimeter_map(img, sp, cp);
        }
        if (pm_slic.values.empty()) pm_slic = pm_quick;
        if (pm_quick.values.empty()) pm_quick = pm_slic;
        LabelMap refined = refine_multiclass(scores, pm_slic, pm_quick, rp);
        save_pgm(refined, outdir + "/" + e.id + ".pgm");
    });

    nlohmann::json j = common_json("refine", common);
    j["simplify"] = sopts.to_json();
    j["canny"] = copts.to_json();
    j["refine"] = ropts.to_json();
    j["manifest"] = manifest_path;
    j["outdir"] = outdir;
    write_run_header(outdir + "/run.json", j);
}

void cmd_eval(const CommonOpts& common, const std::string& manifest_path,
              const std::string& pred_dir, const std::string& classes_path,
              const std::string& report_path, const std::string& table_path) {
    Manifest manifest = load_manifest(manifest_path);
    std::vector<std::string> names = load_class_names(classes_path);
    const int num_classes = int(names.size());

    struct PerImage {
        ConfusionMatrix cm{1};
        Decomposition decomp;
        bool has_gt = false;
    };
    std::vector<PerImage> partial(manifest.entries.size());
    parallel_for(manifest.entries.size(), common.workers, [&](size_t i) {
        const ManifestEntry& e = manifest.entries[i];
        if (!e.gt_path) throw std::runtime_error("eval: entry '" + e.id + "' has no ground truth");
        LabelMap gt = load_pgm(*e.gt_path);
        LabelMap pred = load_pgm(pred_dir + "/" + e.id + ".pgm");
        PerImage p{ConfusionMatrix(num_classes), {}, true};
        accumulate(p.cm, gt, pred);
        BinaryMask gt_fg{gt.width, gt.height, {}}, pred_fg{pred.width, pred.height, {}};
        gt_fg.bits.resize(gt.labels.size());
        pred_fg.bits.resize(pred.labels.size());
        for (size_t k = 0; k < gt.labels.size(); ++k) {
            gt_fg.bits[k] = gt.labels[k] != 0 && gt.labels[k] != LabelMap::kIgnore;
            pred_fg.bits[k] = pred.labels[k] != 0 && pred.labels[k] != LabelMap::kIgnore;
        }
        p.decomp = decompose_prediction(gt_fg, pred_fg);
        partial[i] = std::move(p);
    });

    ConfusionMatrix cm(num_classes);
    double eps_sum = 0, fp_sum = 0;
    int eps_n = 0;
    for (const PerImage& p : partial) {
        cm.add(p.cm);
        if (!p.decomp.gt_empty) {
            eps_sum += p.decomp.epsilon;
            ++eps_n;
        }
        fp_sum += double(p.decomp.fp_count);
    }
    MetricsReport rep = build_report(cm, names);
    if (eps_n > 0) rep.epsilon_mean = eps_sum / eps_n;
    rep.fp_count_mean = fp_sum / double(partial.size());

    atomic_write_file(report_path, report_to_json(rep));
    if (!table_path.empty()) atomic_write_file(table_path, format_report_table(rep));
    std::cout << format_report_table(rep);
}

void cmd_gridsearch(const CommonOpts& common, const SimplifyOptGroup& sopts,
                    const CannyOptGroup& copts, const std::string& manifest_path,
                    const std::string& t_slic_text, const std::string& t_quick_text,
                    const std::string& fusion_list, const std::string& objective_text,
                    const std::string& out_path) {
    Manifest manifest = load_manifest(manifest_path);
    std::vector<FusionMode> fusions;
    std::stringstream ss(fusion_list);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) fusions.push_back(fusion_from_string(item));

    int num_classes = 2;
    for (const auto& e : manifest.entries)
        for (int c : e.classes_present) num_classes = std::max(num_classes, c + 1);

    PerimeterCache cache = build_perimeter_cache(manifest, sopts.resolved(common.seed),
                                                 copts.resolved(), common.workers);
    GridSearchResult result =
        grid_search(manifest, cache, parse_threshold_range(t_slic_text),
                    parse_threshold_range(t_quick_text), fusions,
                    objective_from_string(objective_text), num_classes, common.workers);
    atomic_write_file(out_path, grid_result_to_json(result));

    nlohmann::json j = common_json("gridsearch", common);
    j["simplify"] = sopts.to_json();
    j["canny"] = copts.to_json();
    j["t_slic"] = t_slic_text;
    j["t_quick"] = t_quick_text;
    j["fusion"] = fusion_list;
    j["objective"] = objective_text;
    j["manifest"] = manifest_path;
    j["out"] = out_path;
    write_run_header(out_path + ".run.json", j);
    std::cout << "best t_slic=" << result.best.t_slic << " t_quick=" << result.best.t_quick
              << " fusion=" << to_string(result.best.fusion)
              << " objective_value=" << result.best.objective_value << "\n";
}

void cmd_overlay(const std::string& image, const std::string& mask, const std::string& palette,
                 const std::string& out) {
    RasterImage img = load_ppm(image);
    LabelMap m = load_pgm(mask);
    save_ppm(render_overlay(img, m, load_palette(palette)), out);
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"CAM refinement toolchain: superpixel simplification, perimeter maps, "
                 "flood-fill pruning, metrics and threshold search"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CommonOpts common;

    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
    SynthSpec synth_spec;
    std::string synth_out;
    add_common(synth, common);
    synth->add_option("--n", synth_spec.image_count, "Number of images");
    synth->add_option("--size", synth_spec.image_size, "Image side length");
    synth->add_option("--max-shapes", synth_spec.max_shapes, "Shapes per image (1..3)");
    synth->add_option("--texture", synth_spec.texture_amplitude, "Background texture amplitude");
    synth->add_option("--cam-sigma", synth_spec.cam_blur_sigma, "CAM blur sigma (0 = none)");
    synth->add_option("--distractors", synth_spec.distractor_blob_count, "Distractor blobs per image");
    synth->add_option("--out", synth_out, "Output directory")->required();

    auto* simplify_cmd = app.add_subcommand("simplify", "Superpixel simplification of one image");
    SimplifyOptGroup simplify_opts;
    std::string simplify_image, simplify_out, simplify_flat;
    add_common(simplify_cmd, common);
    simplify_opts.add(simplify_cmd);
    simplify_cmd->add_option("--image", simplify_image, "Input PPM")->required();
    simplify_cmd->add_option("--out", simplify_out, "Output segment map")->required();
    simplify_cmd->add_option("--flat", simplify_flat, "Optional flattened preview PPM");

    auto* edges_cmd = app.add_subcommand("edges", "Canny edge detection on one image");
    CannyOptGroup edges_canny;
    std::string edges_image, edges_out;
    add_common(edges_cmd, common);
    edges_canny.add(edges_cmd);
    edges_cmd->add_option("--image", edges_image, "Input PPM")->required();
    edges_cmd->add_option("--out", edges_out, "Output perimeter PGM")->required();

    auto* perimeter_cmd = app.add_subcommand("perimeter", "Full perimeter map (simplify + canny)");
    SimplifyOptGroup perim_simplify;
    CannyOptGroup perim_canny;
    std::string perim_image, perim_out;
    add_common(perimeter_cmd, common);
    perim_simplify.add(perimeter_cmd);
    perim_canny.add(perimeter_cmd);
    perimeter_cmd->add_option("--image", perim_image, "Input PPM")->required();
    perimeter_cmd->add_option("--out", perim_out, "Output perimeter PGM")->required();

    auto* refine_cmd = app.add_subcommand("refine", "Refine score maps over a manifest");
    SimplifyOptGroup refine_simplify;
    CannyOptGroup refine_canny;
    RefineOptGroup refine_opts;
    std::string refine_manifest, refine_outdir;
    add_common(refine_cmd, common);
    refine_simplify.add(refine_cmd);
    refine_canny.add(refine_cmd);
    refine_opts.add(refine_cmd);
    refine_cmd->add_option("--manifest", refine_manifest, "Dataset manifest JSON")->required();
    refine_cmd->add_option("--outdir", refine_outdir, "Output directory for refined PGMs")->required();

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against ground truth");
    std::string eval_manifest, eval_pred_dir, eval_classes, eval_report, eval_table;
    add_common(eval_cmd, common);
    eval_cmd->add_option("--manifest", eval_manifest, "Dataset manifest JSON")->required();
    eval_cmd->add_option("--pred-dir", eval_pred_dir, "Directory of <id>.pgm predictions")->required();
    eval_cmd->add_option("--classes", eval_classes, "classes.json (id -> name)")->required();
    eval_cmd->add_option("--report", eval_report, "Output report JSON")->required();
    eval_cmd->add_option("--table", eval_table, "Optional output text table");

    auto* grid_cmd = app.add_subcommand("gridsearch", "Threshold grid search");
    SimplifyOptGroup grid_simplify;
    CannyOptGroup grid_canny;
    std::string grid_manifest, grid_tslic = "0.1:0.9:0.1", grid_tquick = "0.1:0.9:0.1";
    std::string grid_fusion = "union", grid_objective = "miou", grid_out;
    add_common(grid_cmd, common);
    grid_simplify.add(grid_cmd);
    grid_canny.add(grid_cmd);
    grid_cmd->add_option("--manifest", grid_manifest, "Dataset manifest JSON")->required();
    grid_cmd->add_option("--t-slic", grid_tslic, "SLIC threshold range a:b:step");
    grid_cmd->add_option("--t-quick", grid_tquick, "Quickshift threshold range a:b:step");
    grid_cmd->add_option("--fusion", grid_fusion, "Comma list of fusion modes to sweep");
    grid_cmd->add_option("--objective", grid_objective, "miou | neg_m_fp");
    grid_cmd->add_option("--out", grid_out, "Output grid JSON")->required();

    auto* overlay_cmd = app.add_subcommand("overlay", "Blend a label map over an image");
    std::string ov_image, ov_mask, ov_palette, ov_out;
    add_common(overlay_cmd, common);
    overlay_cmd->add_option("--image", ov_image, "Input PPM")->required();
    overlay_cmd->add_option("--mask", ov_mask, "Label map PGM")->required();
    overlay_cmd->add_option("--palette", ov_palette, "palette.json (id -> [r,g,b])")->required();
    overlay_cmd->add_option("--out", ov_out, "Output PPM")->required();

    int rc = parse_and_dispatch(app, args);
    if (rc != 0 || app.get_subcommands().empty()) return rc;

    try {
        if (synth->parsed()) cmd_synth(common, synth_spec, synth_out);
        if (simplify_cmd->parsed())
            cmd_simplify(common, simplify_opts, simplify_image, simplify_out, simplify_flat);
        if (edges_cmd->parsed()) cmd_edges(common, edges_canny, edges_image, edges_out);
        if (perimeter_cmd->parsed())
            cmd_perimeter(common, perim_simplify, perim_canny, perim_image, perim_out);
        if (refine_cmd->parsed())
            cmd_refine(common, refine_simplify, refine_canny, refine_opts, refine_manifest,
                       refine_outdir);
        if (eval_cmd->parsed())
            cmd_eval(common, eval_manifest, eval_pred_dir, eval_classes, eval_report, eval_table);
        if (grid_cmd->parsed())
            cmd_gridsearch(common, grid_simplify, grid_canny, grid_manifest, grid_tslic, grid_tquick,
                           grid_fusion, grid_objective, grid_out);
        if (overlay_cmd->parsed()) cmd_overlay(ov_image, ov_mask, ov_palette, ov_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace camref::cli
