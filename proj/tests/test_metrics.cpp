#include <algorithm>
#include <cmath>

#include "camref/metrics.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace camref;

namespace {

LabelMap random_labels(int w, int h, int num_classes, int ignore_percent, Rng& rng) {
    LabelMap m{w, h, std::vector<uint8_t>(size_t(w) * size_t(h))};
    for (auto& v : m.labels)
        v = rng.next_below(100) < uint64_t(ignore_percent)
                ? LabelMap::kIgnore
                : uint8_t(rng.next_below(uint64_t(num_classes)));
    return m;
}

}  // namespace

TEST_CASE("accumulate counts the documented example") {
    ConfusionMatrix cm(2);
    LabelMap gt{4, 1, {0, 0, 1, 1}};
    LabelMap pred{4, 1, {0, 1, 1, 1}};
    accumulate(cm, gt, pred);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 1) == 2);
    CHECK(cm.at(1, 0) == 0);
    CHECK(cm.total() == 4);

    // IoU_0 = 1/2, IoU_1 = 2/3, mIoU = 7/12
    IouResult iou = miou(cm);
    CHECK(iou.per_class[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(iou.per_class[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(iou.miou == doctest::Approx(7.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("accumulate skips ignore pixels and rejects bad labels") {
    ConfusionMatrix cm(3);
    LabelMap gt{3, 1, {255, 255, 255}};
    LabelMap pred{3, 1, {0, 1, 2}};
    accumulate(cm, gt, pred);
    CHECK(cm.total() == 0);

    LabelMap bad_pred{3, 1, {0, 3, 0}};
    LabelMap gt2{3, 1, {0, 0, 0}};
    CHECK_THROWS_AS(accumulate(cm, gt2, bad_pred), std::out_of_range);
    LabelMap short_pred{2, 1, {0, 0}};
    CHECK_THROWS_AS(accumulate(cm, gt2, short_pred), std::invalid_argument);
}

TEST_CASE("miou extremes") {
    ConfusionMatrix perfect(3);
    perfect.at(0, 0) = 10;
    perfect.at(1, 1) = 5;
    perfect.at(2, 2) = 7;
    IouResult iou = miou(perfect);
    CHECK(iou.miou == 1.0);
    for (double v : iou.per_class) CHECK(v == 1.0);

    // Complemented binary prediction: zero everywhere.
    ConfusionMatrix flipped(2);
    flipped.at(0, 1) = 8;
    flipped.at(1, 0) = 8;
    iou = miou(flipped);
    CHECK(iou.miou == 0.0);

    // A class absent from gt and pred is excluded from the mean.
    ConfusionMatrix sparse(3);
    sparse.at(0, 0) = 4;
    iou = miou(sparse);
    CHECK(iou.defined_classes == 1);
    CHECK(std::isnan(iou.per_class[1]));
    CHECK(iou.miou == 1.0);

    CHECK_THROWS_AS(miou(ConfusionMatrix(2)), std::runtime_error);
}

TEST_CASE("overactivation from direct counts") {
    ConfusionMatrix perfect(2);
    perfect.at(0, 0) = 6;
    perfect.at(1, 1) = 4;
    OveractivationResult r = overactivation(perfect);
    CHECK(r.m_fp == 0.0);
    CHECK(r.m_fn == 0.0);

    // Single foreground class, TP=2, FP=1, FN=1.
    ConfusionMatrix cm(2);
    cm.at(1, 1) = 2;
    cm.at(0, 1) = 1;
    cm.at(1, 0) = 1;
    cm.at(0, 0) = 5;
    r = overactivation(cm);
    CHECK(r.m_fp == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.m_fn == doctest::Approx(0.5).epsilon(1e-12));

    // TP=0 classes are excluded by default, or take a sentinel when given.
    ConfusionMatrix partial(3);
    partial.at(1, 1) = 2;
    partial.at(0, 1) = 1;
    partial.at(2, 0) = 3;  // class 2 never predicted
    r = overactivation(partial);
    CHECK(r.excluded_classes == 1);
    CHECK(r.m_fp == doctest::Approx(0.5).epsilon(1e-12));
    OveractivationResult s = overactivation(partial, 9.0);
    CHECK(s.m_fp == doctest::Approx((0.5 + 9.0) / 2).epsilon(1e-12));

    ConfusionMatrix empty_fg(2);
    empty_fg.at(0, 0) = 4;
    CHECK_THROWS_AS(overactivation(empty_fg), std::runtime_error);
}

TEST_CASE("decompose_prediction set arithmetic") {
    BinaryMask gt{5, 4, std::vector<uint8_t>(20, 0)};
    for (int i = 0; i < 10; ++i) gt.bits[size_t(i)] = 1;
    BinaryMask pred = gt;
    Decomposition d = decompose_prediction(gt, pred);
    CHECK(d.epsilon == 1.0);
    CHECK(d.fp_count == 0);

    // pred covers 6 of the 10 gt pixels plus 3 outside.
    pred.bits.assign(20, 0);
    for (int i = 0; i < 6; ++i) pred.bits[size_t(i)] = 1;
    for (int i = 10; i < 13; ++i) pred.bits[size_t(i)] = 1;
    d = decompose_prediction(gt, pred);
    CHECK(d.epsilon == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(d.fp_count == 3);

    pred.bits.assign(20, 0);
    d = decompose_prediction(gt, pred);
    CHECK(d.epsilon == 0.0);
    CHECK(d.fp_count == 0);

    BinaryMask nothing{5, 4, std::vector<uint8_t>(20, 0)};
    d = decompose_prediction(nothing, pred);
    CHECK(d.gt_empty);
}

TEST_CASE("metrics agree with a per-pixel recount oracle") {
    Rng rng(60601);
    for (int trial = 0; trial < 100; ++trial) {
        const int C = 4, w = 16, h = 16;
        LabelMap gt = random_labels(w, h, C, 10, rng);
        LabelMap pred = random_labels(w, h, C, 0, rng);

        ConfusionMatrix cm(C);
        accumulate(cm, gt, pred);

        // Direct recount.
        uint64_t counts[C][C] = {};
        for (size_t i = 0; i < gt.labels.size(); ++i) {
            if (gt.labels[i] == LabelMap::kIgnore || pred.labels[i] == LabelMap::kIgnore) continue;
            ++counts[gt.labels[i]][pred.labels[i]];
        }
        for (int a = 0; a < C; ++a)
            for (int b = 0; b < C; ++b) CHECK(cm.at(a, b) == counts[a][b]);

        // IoU and overactivation from raw tallies.
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
            uint64_t denom = tp + fp + fn;
            if (denom == 0) {
                CHECK(std::isnan(iou.per_class[size_t(c)]));
                continue;
            }
            double want = double(tp) / double(denom);
            CHECK(std::abs(iou.per_class[size_t(c)] - want) <= 1e-12);
            sum += want;
            ++defined;
        }
        CHECK(std::abs(iou.miou - sum / defined) <= 1e-12);

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
            CHECK(std::abs(over.m_fp - fp_sum / used) <= 1e-12);
            CHECK(std::abs(over.m_fn - fn_sum / used) <= 1e-12);
        }
    }
}

TEST_CASE("accumulate is order independent") {
    Rng rng(8);
    std::vector<std::pair<LabelMap, LabelMap>> batches;
    for (int i = 0; i < 6; ++i)
        batches.push_back({random_labels(9, 9, 3, 10, rng), random_labels(9, 9, 3, 0, rng)});
    ConfusionMatrix forward(3), backward(3);
    for (const auto& [gt, pred] : batches) accumulate(forward, gt, pred);
    for (auto it = batches.rbegin(); it != batches.rend(); ++it)
        accumulate(backward, it->first, it->second);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) CHECK(forward.at(a, b) == backward.at(a, b));
}

TEST_CASE("miou is invariant under consistent class permutation") {
    Rng rng(13);
    LabelMap gt = random_labels(12, 12, 4, 5, rng);
    LabelMap pred = random_labels(12, 12, 4, 0, rng);
    ConfusionMatrix cm(4);
    accumulate(cm, gt, pred);

    const uint8_t perm[4] = {2, 0, 3, 1};
    auto apply = [&](const LabelMap& m) {
        LabelMap out = m;
        for (auto& v : out.labels)
            if (v != LabelMap::kIgnore) v = perm[v];
        return out;
    };
    ConfusionMatrix pcm(4);
    LabelMap pgt = apply(gt), ppred = apply(pred);
    accumulate(pcm, pgt, ppred);
    CHECK(miou(cm).miou == doctest::Approx(miou(pcm).miou).epsilon(1e-12));
}

TEST_CASE("report table and JSON round trip") {
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 90;
    cm.at(1, 1) = 8;
    cm.at(0, 1) = 1;
    cm.at(1, 0) = 1;
    MetricsReport rep = build_report(cm, {"bkg", "disk"});
    rep.epsilon_mean = 0.875;
    rep.fp_count_mean = 1.0;

    IouResult iou = miou(cm);
    CHECK(rep.per_class_iou[0] == iou.per_class[0]);
    CHECK(rep.per_class_iou[1] == iou.per_class[1]);
    CHECK(rep.miou == iou.miou);

    std::string table = format_report_table(rep);
    CHECK(table.find("bkg") != std::string::npos);
    CHECK(table.find("disk") != std::string::npos);
    CHECK(table.find("mIoU") != std::string::npos);

    MetricsReport back = report_from_json(report_to_json(rep));
    CHECK(back.class_names == rep.class_names);
    CHECK(back.miou == rep.miou);
    CHECK(back.m_fp == rep.m_fp);
    CHECK(back.m_fn == rep.m_fn);
    CHECK(back.per_class_iou == rep.per_class_iou);
    CHECK(*back.epsilon_mean == *rep.epsilon_mean);
    CHECK(*back.fp_count_mean == *rep.fp_count_mean);

    CHECK_THROWS_AS(build_report(cm, {"only_one"}), std::invalid_argument);
}
