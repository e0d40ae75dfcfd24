#pragma once

#include <string>
#include <vector>

#include "camref/canny.hpp"
#include "camref/image.hpp"
#include "camref/superpixels.hpp"

namespace camref {

enum class FusionMode { fuse_union, fuse_intersection, slic_only, quick_only };

struct RefineParams {
    double threshold_slic = 0.35;
    double threshold_quick = 0.40;
    FusionMode fusion = FusionMode::fuse_union;
    // Cluster regions are fixed to 4-adjacency: 8-adjacency would leak
    // diagonally through one-pixel-wide perimeter lines.

    void validate() const;
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;  // 0 or 1

    bool at(int x, int y) const { return bits[size_t(y) * width + x] != 0; }
};

// Foreground iff score > t; pixels with score <= t are the flood-fill seeds.
BinaryMask threshold_cam(const std::vector<float>& plane, int width, int height, double t);

// simplify -> flatten -> canny on the input photograph.
PerimeterMap build_perimeter_map(const RasterImage& image, const SimplifyParams& simplify_params,
                                 const CannyParams& canny_params);

// Core pruning rule: every 4-connected cluster of non-edge pixels that
// contains at least one background-seed pixel (score <= t) is cleared
// entirely; clusters made of foreground only are kept. Edge pixels are
// resolved last by the majority label of their resolved 8-neighbors, ties to
// background.
BinaryMask refine_class(const BinaryMask& mask, const PerimeterMap& pm,
                        const std::vector<float>& plane, double t);

// Literal queue-based flood fill kept as a differential oracle: seeds at every
// non-edge background pixel, expands through non-edge 4-neighbors, clears
// foreground as it goes. Agrees with refine_class on all non-edge pixels.
BinaryMask floodfill_reference(const BinaryMask& mask, const PerimeterMap& pm,
                               const std::vector<float>& plane, double t);

// Per-class refinement with both perimeter-map variants, fused per params,
// then per-pixel argmax of raw scores across classes whose fused mask is
// foreground; background 0 where none is. Class ids 0 and 255 are reserved.
LabelMap refine_multiclass(const ScoreMap& scores, const PerimeterMap& pm_slic,
                           const PerimeterMap& pm_quick, const RefineParams& params);

// Same label assembly without perimeter pruning; the raw-CAM baseline.
LabelMap threshold_multiclass(const ScoreMap& scores, const RefineParams& params);

BinaryMask fuse_masks(const BinaryMask& slic_mask, const BinaryMask& quick_mask, FusionMode mode);

const char* to_string(FusionMode m);
FusionMode fusion_from_string(const std::string& s);

}  // namespace camref
