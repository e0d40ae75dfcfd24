// Acceptance suite: one check per release criterion, one PASS/FAIL line each.
// Exit code is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "camref/canny.hpp"
#include "camref/grid_search.hpp"
#include "camref/image.hpp"
#include "camref/manifest.hpp"
#include "camref/metrics.hpp"
#include "camref/parallel.hpp"
#include "camref/perimeter_fit.hpp"
#include "camref/rng.hpp"
#include "camref/superpixels.hpp"
#include "camref/synth.hpp"
#include "test_helpers.hpp"

using namespace camref;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %-24s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    if (!ok) ++failures;
}

// ---- 1. metric oracle ---------------------------------------------------------

void check_metric_oracle() {
    auto t0 = Clock::now();
    Rng rng(1000);
    const int C = 4, w = 16, h = 16;
    long bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        LabelMap gt{w, h, std::vector<uint8_t>(size_t(w) * size_t(h))};
        LabelMap pred{w, h, std::vector<uint8_t>(size_t(w) * size_t(h))};
        for (auto& v : gt.labels)
            v = rng.next_below(100) < 10 ? LabelMap::kIgnore : uint8_t(rng.next_below(C));
        for (auto& v : pred.labels) v = uint8_t(rng.next_below(C));

        ConfusionMatrix cm(C);
        accumulate(cm, gt, pred);

        uint64_t counts[4][4] = {};
        for (size_t i = 0; i < gt.labels.size(); ++i) {
            if (gt.labels[i] == LabelMap::kIgnore) continue;
            ++counts[gt.labels[i]][pred.labels[i]];
        }
        for (int a = 0; a < C; ++a)
            for (int b = 0; b < C; ++b)
                if (cm.at(a, b) != counts[a][b]) ++bad;

        IouResult iou = miou(cm);
        double sum = 0;
        int defined = 0;
        for (int c = 0; c < C; ++c) {
            uint64_t tp = counts[c][c], fp = 0, fn = 0;
            for (int j = 0; j < C; ++j)
                if (j != c) {
                    fp += counts[j][c];
                    fn += counts[c][j];
                }
            if (tp + fp + fn == 0) {
                if (!std::isnan(iou.per_class[size_t(c)])) ++bad;
                continue;
            }
            double want = double(tp) / double(tp + fp + fn);
            if (std::abs(iou.per_class[size_t(c)] - want) > 1e-12) ++bad;
            sum += want;
            ++defined;
        }
        if (std::abs(iou.miou - sum / defined) > 1e-12) ++bad;

        double fp_sum = 0, fn_sum = 0;
        int used = 0;
        for (int c = 1; c < C; ++c) {
            uint64_t tp = counts[c][c], fp = 0, fn = 0;
            for (int j = 0; j < C; ++j)
                if (j != c) {
                    fp += counts[j][c];
                    fn += counts[c][j];
                }
            if (tp == 0) continue;
            fp_sum += double(fp) / double(tp);
            fn_sum += double(fn) / double(tp);
            ++used;
        }
        if (used > 0) {
            OveractivationResult over = overactivation(cm);
            if (std::abs(over.m_fp - fp_sum / used) > 1e-12) ++bad;
            if (std::abs(over.m_fn - fn_sum / used) > 1e-12) ++bad;
        }

        // Eq.-1-style decomposition against direct set counting.
        BinaryMask gtb{w, h, std::vector<uint8_t>(gt.labels.size())};
        BinaryMask prb{w, h, std::vector<uint8_t>(pred.labels.size())};
        for (size_t i = 0; i < gt.labels.size(); ++i) {
            gtb.bits[i] = gt.labels[i] != 0 && gt.labels[i] != LabelMap::kIgnore;
            prb.bits[i] = pred.labels[i] != 0;
        }
        Decomposition d = decompose_prediction(gtb, prb);
        uint64_t inter = 0, gt_n = 0, fp_n = 0;
        for (size_t i = 0; i < gtb.bits.size(); ++i) {
            gt_n += gtb.bits[i];
            inter += gtb.bits[i] & prb.bits[i];
            fp_n += (!gtb.bits[i]) & prb.bits[i];
        }
        if (d.fp_count != fp_n) ++bad;
        if (gt_n > 0 && std::abs(d.epsilon - double(inter) / double(gt_n)) > 1e-12) ++bad;
    }
    double secs = seconds_since(t0);
    char detail[128];
    std::snprintf(detail, sizeof detail, "1000 random 16x16 pairs, %ld mismatches, %.2fs", bad, secs);
    report("metric-oracle", bad == 0 && secs < 5.0, detail);
}

// ---- 2 + 3. flood-fill equivalence and shrink-only law --------------------------

void check_floodfill_and_shrink() {
    auto t0 = Clock::now();
    Rng rng(2000);
    const int w = 64, h = 64;
    long diff = 0, grow = 0;
    for (int trial = 0; trial < 500; ++trial) {
        PerimeterMap pm{w, h, std::vector<uint8_t>(size_t(w) * size_t(h), 0)};
        for (auto& v : pm.values) v = rng.next_below(100) < 20 ? 255 : 0;
        std::vector<float> plane(pm.values.size());
        for (auto& v : plane) v = float(rng.next_unit());
        double t = 0.2 + 0.6 * rng.next_unit();
        BinaryMask mask = threshold_cam(plane, w, h, t);

        BinaryMask a = refine_class(mask, pm, plane, t);
        BinaryMask b = floodfill_reference(mask, pm, plane, t);
        for (size_t i = 0; i < a.bits.size(); ++i) {
            if (pm.values[i] != 0) continue;
            if (a.bits[i] != b.bits[i]) ++diff;
            if (a.bits[i] && !mask.bits[i]) ++grow;
        }
    }
    double secs = seconds_since(t0);
    char detail[160];
    std::snprintf(detail, sizeof detail, "500 random 64x64 triples, %ld disagreements, %.2fs", diff,
                  secs);
    report("floodfill-equivalence", diff == 0 && secs < 10.0, detail);
    std::snprintf(detail, sizeof detail, "same 500 triples, %ld grown pixels", grow);
    report("shrink-only", grow == 0, detail);
}

// ---- 4. canny properties --------------------------------------------------------

void check_canny_properties() {
    bool ok = true;
    std::string why;

    PerimeterMap flat = canny(testutil::solid_image(64, 64, 120, 130, 140), CannyParams{});
    for (uint8_t v : flat.values)
        if (v != 0) {
            ok = false;
            why = "constant image produced edges";
        }

    RasterImage tone = testutil::solid_image(64, 64, 40, 40, 40);
    for (int y = 0; y < 64; ++y)
        for (int x = 32; x < 64; ++x)
            for (int c = 0; c < 3; ++c) tone.data[(size_t(y) * 64 + x) * 3 + size_t(c)] = 200;
    PerimeterMap edge = canny(tone, CannyParams{});
    for (int y = 0; y < 64 && ok; ++y) {
        int count = 0;
        for (int x = 0; x < 64; ++x)
            if (edge.is_edge(x, y)) {
                ++count;
                if (std::abs(x - 31.5) > 1.5) {
                    ok = false;
                    why = "edge farther than one column from the boundary";
                }
            }
        if (count != 1) {
            ok = false;
            why = "row without exactly one edge pixel";
        }
    }

    Rng rng(4000);
    for (int trial = 0; trial < 50 && ok; ++trial) {
        RasterImage img = testutil::blocky_image(48, 48, rng);
        CannyParams lo, hi;
        lo.high = 0.2;
        hi.high = 0.4;
        PerimeterMap a = canny(img, lo), b = canny(img, hi);
        for (size_t i = 0; i < a.values.size(); ++i)
            if (b.values[i] == 255 && a.values[i] != 255) {
                ok = false;
                why = "raising high added an edge pixel";
            }
    }
    report("canny-properties", ok, ok ? "constant, two-tone, threshold monotonicity" : why);
}

// ---- 5. superpixel properties ---------------------------------------------------

bool segment_connected(const SegmentMap& seg, int id) {
    size_t start = size_t(-1), count = 0;
    for (size_t i = 0; i < seg.segments.size(); ++i)
        if (seg.segments[i] == id) {
            if (start == size_t(-1)) start = i;
            ++count;
        }
    if (count == 0) return false;
    std::vector<size_t> stack{start};
    std::vector<char> seen(seg.segments.size(), 0);
    seen[start] = 1;
    size_t reached = 1;
    while (!stack.empty()) {
        size_t i = stack.back();
        stack.pop_back();
        int x = int(i % size_t(seg.width)), y = int(i / size_t(seg.width));
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            int nx = x + dx[d], ny = y + dy[d];
            if (nx < 0 || nx >= seg.width || ny < 0 || ny >= seg.height) continue;
            size_t j = size_t(ny) * size_t(seg.width) + size_t(nx);
            if (!seen[j] && seg.segments[j] == id) {
                seen[j] = 1;
                ++reached;
                stack.push_back(j);
            }
        }
    }
    return reached == count;
}

void check_superpixel_properties() {
    auto t0 = Clock::now();
    Rng rng(5000);
    bool ok = true;
    std::string why;
    std::vector<RasterImage> images;
    for (int i = 0; i < 50; ++i) images.push_back(testutil::blocky_image(48, 48, rng));

    for (size_t i = 0; i < images.size() && ok; ++i) {
        SimplifyParams p;
        p.qs_max_dist = 8;
        for (SimplifyMethod m : {SimplifyMethod::slic, SimplifyMethod::quickshift}) {
            p.method = m;
            SegmentMap seg = simplify(images[i], p);
            if (seg.num_segments > p.q) {
                ok = false;
                why = "segment count above q";
            }
            for (int s = 0; s < seg.num_segments && ok; ++s)
                if (!segment_connected(seg, s)) {
                    ok = false;
                    why = "disconnected segment";
                }
        }
        QuickshiftForest f = quickshift_forest(images[i], p);
        for (size_t px = 0; px < f.parent.size() && ok; ++px)
            if (f.parent[px] >= 0 && !(f.density[size_t(f.parent[px])] >= f.density[px])) {
                ok = false;
                why = "quickshift parent density below child";
            }
    }

    // Worker count must not change bytes: build perimeter maps for the first
    // eight images with 1 and 8 workers.
    if (ok) {
        auto run_batch = [&](int workers) {
            std::vector<std::string> encoded(8);
            parallel_for(8, workers, [&](size_t i) {
                SimplifyParams sp;
                PerimeterMap pm = build_perimeter_map(images[i], sp, CannyParams{});
                encoded[i] = encode_pgm(LabelMap{pm.width, pm.height, pm.values});
            });
            return encoded;
        };
        if (run_batch(1) != run_batch(8)) {
            ok = false;
            why = "worker count changed results";
        }
    }
    char detail[128];
    std::snprintf(detail, sizeof detail, "%s (%.1fs)",
                  ok ? "50 images, both methods, forest + worker determinism" : why.c_str(),
                  seconds_since(t0));
    report("superpixel-properties", ok, detail);
}

// ---- 6. directional over-activation reproduction --------------------------------

void check_table_direction() {
    auto t0 = Clock::now();
    std::string dir = testutil::scratch_dir("acceptance_synth");
    SynthSpec spec;
    spec.image_count = 100;
    spec.rng_seed = 42;
    synth_generate(spec, dir);
    Manifest manifest = load_manifest(dir + "/manifest.json");

    RefineParams rp;  // default thresholds and union fusion
    const int C = 4;
    ConfusionMatrix pooled_refined(C), pooled_raw(C);
    int lower = 0, evaluated = 0;
    for (const auto& e : manifest.entries) {
        RasterImage img = load_ppm(e.image_path);
        ScoreMap scores = load_smf(e.score_path);
        LabelMap gt = load_pgm(*e.gt_path);

        SimplifyParams sp;
        sp.method = SimplifyMethod::slic;
        PerimeterMap pm_slic = build_perimeter_map(img, sp, CannyParams{});
        sp.method = SimplifyMethod::quickshift;
        PerimeterMap pm_quick = build_perimeter_map(img, sp, CannyParams{});

        LabelMap refined = refine_multiclass(scores, pm_slic, pm_quick, rp);
        LabelMap raw = threshold_multiclass(scores, rp);

        ConfusionMatrix cm_r(C), cm_t(C);
        accumulate(cm_r, gt, refined);
        accumulate(cm_t, gt, raw);
        pooled_refined.add(cm_r);
        pooled_raw.add(cm_t);

        ++evaluated;
        try {
            double fp_refined = overactivation(cm_r).m_fp;
            double fp_raw = overactivation(cm_t).m_fp;
            if (fp_refined < fp_raw) ++lower;
        } catch (const std::runtime_error&) {
            // no true positives anywhere: counts as not-lower
        }
    }
    double miou_refined = miou(pooled_refined).miou;
    double miou_raw = miou(pooled_raw).miou;
    double secs = seconds_since(t0);

    bool ok = lower >= 95 && (miou_refined - miou_raw) >= 0.02 && secs < 60.0;
    char detail[192];
    std::snprintf(detail, sizeof detail,
                  "m_FP lower on %d/%d, mIoU %.1f%% vs %.1f%% (+%.1f pts), %.1fs single-threaded",
                  lower, evaluated, miou_refined * 100, miou_raw * 100,
                  (miou_refined - miou_raw) * 100, secs);
    report("table5-direction", ok, detail);
}

// ---- 7. grid-search recovery ----------------------------------------------------

void check_gridsearch_recovery() {
    auto t0 = Clock::now();
    std::string dir = testutil::scratch_dir("acceptance_grid");
    generate_bimodal_fixture(4, 96, 42, dir);
    Manifest manifest = load_manifest(dir + "/manifest.json");

    auto run_once = [&]() {
        PerimeterCache cache = build_perimeter_cache(manifest, SimplifyParams{}, CannyParams{}, 1);
        ThresholdRange full{0.1, 0.9, 0.1};
        return grid_search(manifest, cache, full, full, {FusionMode::fuse_union},
                           GridObjective::miou, 2, 1);
    };
    GridSearchResult a = run_once();
    GridSearchResult b = run_once();

    bool in_range = a.best.t_slic >= 0.3 && a.best.t_slic <= 0.7 && a.best.t_quick >= 0.3 &&
                    a.best.t_quick <= 0.7;
    bool deterministic = a.best.t_slic == b.best.t_slic && a.best.t_quick == b.best.t_quick &&
                         a.best.fusion == b.best.fusion &&
                         a.best.objective_value == b.best.objective_value;
    char detail[160];
    std::snprintf(detail, sizeof detail, "best (%.1f, %.1f) mIoU %.3f, 9x9 grid, repeat %s (%.1fs)",
                  a.best.t_slic, a.best.t_quick, a.best.objective_value,
                  deterministic ? "identical" : "DIVERGED", seconds_since(t0));
    report("gridsearch-recovery", in_range && deterministic, detail);
}

// ---- 8. I/O round trips ---------------------------------------------------------

void check_io_roundtrips() {
    std::string dir = testutil::scratch_dir("acceptance_io");
    Rng rng(8000);
    long bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        int w = 1 + int(rng.next_below(24)), h = 1 + int(rng.next_below(20));

        RasterImage img = testutil::random_image(w, h, rng);
        std::string p1 = dir + "/a.ppm";
        save_ppm(img, p1);
        std::string bytes = read_file(p1);
        RasterImage back = load_ppm(p1);
        if (back.data != img.data || back.width != w || back.height != h) ++bad;
        save_ppm(back, p1);
        if (read_file(p1) != bytes) ++bad;

        LabelMap lm{w, h, std::vector<uint8_t>(size_t(w) * size_t(h))};
        for (auto& v : lm.labels) v = uint8_t(rng.next_below(256));
        std::string p2 = dir + "/a.pgm";
        save_pgm(lm, p2);
        bytes = read_file(p2);
        LabelMap lback = load_pgm(p2);
        if (lback.labels != lm.labels) ++bad;
        save_pgm(lback, p2);
        if (read_file(p2) != bytes) ++bad;

        ScoreMap sm;
        sm.width = w;
        sm.height = h;
        int classes = 1 + int(rng.next_below(3));
        for (int c = 0; c < classes; ++c) {
            sm.class_ids.push_back(c + 1);
            sm.planes.emplace_back(size_t(w) * size_t(h));
            for (auto& v : sm.planes.back()) v = float(rng.next_unit());
        }
        std::string p3 = dir + "/a.smf";
        save_smf(sm, p3);
        bytes = read_file(p3);
        ScoreMap sback = load_smf(p3);
        for (int c = 0; c < classes; ++c)
            for (size_t i = 0; i < sm.planes[size_t(c)].size(); ++i)
                if (std::memcmp(&sback.planes[size_t(c)][i], &sm.planes[size_t(c)][i], 4) != 0)
                    ++bad;
        save_smf(sback, p3);
        if (read_file(p3) != bytes) ++bad;
    }
    char detail[96];
    std::snprintf(detail, sizeof detail, "100 instances each of PPM/PGM/SMF1, %ld mismatches", bad);
    report("io-roundtrips", bad == 0, detail);
}

}  // namespace

int main() {
    check_metric_oracle();
    check_floodfill_and_shrink();
    check_canny_properties();
    check_superpixel_properties();
    check_table_direction();
    check_gridsearch_recovery();
    check_io_roundtrips();
    if (failures) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
