#include "camref/perimeter_fit.hpp"

#include <queue>
#include <stdexcept>

namespace camref {

void RefineParams::validate() const {
    if (!(threshold_slic > 0 && threshold_slic < 1) || !(threshold_quick > 0 && threshold_quick < 1))
        throw std::invalid_argument("refine: thresholds must lie in (0,1)");
}

const char* to_string(FusionMode m) {
    switch (m) {
        case FusionMode::fuse_union: return "union";
        case FusionMode::fuse_intersection: return "intersection";
        case FusionMode::slic_only: return "slic_only";
        default: return "quick_only";
    }
}

FusionMode fusion_from_string(const std::string& s) {
    if (s == "union") return FusionMode::fuse_union;
    if (s == "intersection") return FusionMode::fuse_intersection;
    if (s == "slic_only") return FusionMode::slic_only;
    if (s == "quick_only") return FusionMode::quick_only;
    throw std::invalid_argument("unknown fusion mode '" + s + "'");
}

BinaryMask threshold_cam(const std::vector<float>& plane, int width, int height, double t) {
    if (plane.size() != size_t(width) * size_t(height))
        throw std::invalid_argument("threshold_cam: plane size mismatch");
    BinaryMask m;
    m.width = width;
    m.height = height;
    m.bits.resize(plane.size());
    for (size_t i = 0; i < plane.size(); ++i) m.bits[i] = plane[i] > t ? 1 : 0;
    return m;
}

PerimeterMap build_perimeter_map(const RasterImage& image, const SimplifyParams& simplify_params,
                                 const CannyParams& canny_params) {
    SegmentMap seg = simplify(image, simplify_params);
    return canny(flatten(image, seg), canny_params);
}

namespace {

void check_refine_inputs(const BinaryMask& mask, const PerimeterMap& pm,
                         const std::vector<float>& plane) {
    if (mask.width != pm.width || mask.height != pm.height ||
        mask.bits.size() != plane.size() || mask.bits.size() != pm.values.size())
        throw std::invalid_argument("refine: mask/perimeter/plane dimensions mismatch");
}

}  // namespace

BinaryMask refine_class(const BinaryMask& mask, const PerimeterMap& pm,
                        const std::vector<float>& plane, double t) {
    check_refine_inputs(mask, pm, plane);
    const int w = mask.width, h = mask.height;
    const size_t n = mask.bits.size();

    // Label the 4-connected clusters of non-edge pixels and record whether
    // each one holds a background seed.
    std::vector<int> cluster(n, -1);
    std::vector<char> poisoned;
    std::queue<size_t> bfs;
    for (size_t s = 0; s < n; ++s) {
        if (pm.values[s] != 0 || cluster[s] >= 0) continue;
        int id = int(poisoned.size());
        poisoned.push_back(0);
        cluster[s] = id;
        bfs.push(s);
        while (!bfs.empty()) {
            size_t i = bfs.front();
            bfs.pop();
            if (plane[i] <= t) poisoned[size_t(id)] = 1;
            int x = int(i % size_t(w)), y = int(i / size_t(w));
            const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                int nx = x + dx[d], ny = y + dy[d];
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                size_t j = size_t(ny) * size_t(w) + size_t(nx);
                if (pm.values[j] == 0 && cluster[j] < 0) {
                    cluster[j] = id;
                    bfs.push(j);
                }
            }
        }
    }

    BinaryMask out;
    out.width = w;
    out.height = h;
    out.bits.assign(n, 0);
    for (size_t i = 0; i < n; ++i)
        if (pm.values[i] == 0 && mask.bits[i] && !poisoned[size_t(cluster[i])]) out.bits[i] = 1;

    // Edge pixels resolve last: majority over the resolved labels of their
    // in-bounds non-edge 8-neighbors, ties (including no voters) to background.
    for (size_t i = 0; i < n; ++i) {
        if (pm.values[i] == 0) continue;
        int x = int(i % size_t(w)), y = int(i / size_t(w));
        int fg = 0, bg = 0;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                size_t j = size_t(ny) * size_t(w) + size_t(nx);
                if (pm.values[j] != 0) continue;
                (out.bits[j] ? fg : bg)++;
            }
        if (fg > bg) out.bits[i] = 1;
    }
    return out;
}

BinaryMask floodfill_reference(const BinaryMask& mask, const PerimeterMap& pm,
                               const std::vector<float>& plane, double t) {
    check_refine_inputs(mask, pm, plane);
    const int w = mask.width, h = mask.height;
    const size_t n = mask.bits.size();

    std::vector<char> cleared(n, 0);
    std::vector<size_t> stack;
    for (size_t i = 0; i < n; ++i)
        if (pm.values[i] == 0 && plane[i] <= t) {
            cleared[i] = 1;
            stack.push_back(i);
        }
    while (!stack.empty()) {
        size_t i = stack.back();
        stack.pop_back();
        int x = int(i % size_t(w)), y = int(i / size_t(w));
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            int nx = x + dx[d], ny = y + dy[d];
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            size_t j = size_t(ny) * size_t(w) + size_t(nx);
            if (pm.values[j] == 0 && !cleared[j]) {
                cleared[j] = 1;
                stack.push_back(j);
            }
        }
    }

    BinaryMask out = mask;
    for (size_t i = 0; i < n; ++i)
        if (pm.values[i] == 0 && cleared[i]) out.bits[i] = 0;
    return out;
}

BinaryMask fuse_masks(const BinaryMask& slic_mask, const BinaryMask& quick_mask, FusionMode mode) {
    if (mode == FusionMode::slic_only) return slic_mask;
    if (mode == FusionMode::quick_only) return quick_mask;
    if (slic_mask.width != quick_mask.width || slic_mask.height != quick_mask.height)
        throw std::invalid_argument("fuse_masks: dimensions mismatch");
    BinaryMask out = slic_mask;
    for (size_t i = 0; i < out.bits.size(); ++i)
        out.bits[i] = mode == FusionMode::fuse_union ? (slic_mask.bits[i] | quick_mask.bits[i])
                                                     : (slic_mask.bits[i] & quick_mask.bits[i]);
    return out;
}

namespace {

LabelMap assemble_labels(const ScoreMap& scores, const std::vector<BinaryMask>& fused) {
    LabelMap out;
    out.width = scores.width;
    out.height = scores.height;
    out.labels.assign(size_t(scores.width) * size_t(scores.height), 0);
    for (size_t i = 0; i < out.labels.size(); ++i) {
        int best_class = 0;
        float best_score = -1.0f;
        for (int c = 0; c < scores.num_classes(); ++c) {
            if (!fused[size_t(c)].bits[i]) continue;
            // Strictly higher raw score wins; equal scores keep the lower id.
            if (scores.planes[size_t(c)][i] > best_score) {
                best_score = scores.planes[size_t(c)][i];
                best_class = scores.class_ids[size_t(c)];
            }
        }
        out.labels[i] = uint8_t(best_class);
    }
    return out;
}

void check_class_ids(const ScoreMap& scores) {
    for (int id : scores.class_ids)
        if (id <= 0 || id >= 255)
            throw std::invalid_argument("refine: class id " + std::to_string(id) +
                                        " collides with reserved background 0 / ignore 255");
}

}  // namespace

LabelMap refine_multiclass(const ScoreMap& scores, const PerimeterMap& pm_slic,
                           const PerimeterMap& pm_quick, const RefineParams& params) {
    params.validate();
    check_class_ids(scores);
    if (pm_slic.width != scores.width || pm_slic.height != scores.height ||
        pm_quick.width != scores.width || pm_quick.height != scores.height)
        throw std::invalid_argument("refine_multiclass: perimeter/score dimensions mismatch");

    std::vector<BinaryMask> fused;
    fused.reserve(size_t(scores.num_classes()));
    for (int c = 0; c < scores.num_classes(); ++c) {
        const auto& plane = scores.planes[size_t(c)];
        BinaryMask ms, mq;
        if (params.fusion != FusionMode::quick_only) {
            BinaryMask thr = threshold_cam(plane, scores.width, scores.height, params.threshold_slic);
            ms = refine_class(thr, pm_slic, plane, params.threshold_slic);
        }
        if (params.fusion != FusionMode::slic_only) {
            BinaryMask thr = threshold_cam(plane, scores.width, scores.height, params.threshold_quick);
            mq = refine_class(thr, pm_quick, plane, params.threshold_quick);
        }
        switch (params.fusion) {
            case FusionMode::slic_only: fused.push_back(std::move(ms)); break;
            case FusionMode::quick_only: fused.push_back(std::move(mq)); break;
            default: fused.push_back(fuse_masks(ms, mq, params.fusion));
        }
    }
    return assemble_labels(scores, fused);
}

LabelMap threshold_multiclass(const ScoreMap& scores, const RefineParams& params) {
    params.validate();
    check_class_ids(scores);
    std::vector<BinaryMask> fused;
    fused.reserve(size_t(scores.num_classes()));
    for (int c = 0; c < scores.num_classes(); ++c) {
        const auto& plane = scores.planes[size_t(c)];
        BinaryMask ms = threshold_cam(plane, scores.width, scores.height, params.threshold_slic);
        BinaryMask mq = threshold_cam(plane, scores.width, scores.height, params.threshold_quick);
        fused.push_back(fuse_masks(ms, mq, params.fusion));
    }
    return assemble_labels(scores, fused);
}

}  // namespace camref
