#pragma once

#include <map>
#include <string>
#include <vector>

#include "camref/canny.hpp"
#include "camref/manifest.hpp"
#include "camref/perimeter_fit.hpp"
#include "camref/superpixels.hpp"

namespace camref {

// Perimeter maps for both simplification variants, computed once per image
// and reused across the whole threshold grid.
struct PerimeterCache {
    SimplifyParams simplify_base;  // method field ignored; both variants built
    CannyParams canny_params;
    std::map<std::string, std::pair<PerimeterMap, PerimeterMap>> by_id;  // id -> (slic, quick)
};

PerimeterCache build_perimeter_cache(const Manifest& manifest, const SimplifyParams& simplify_base,
                                     const CannyParams& canny_params, int workers);

enum class GridObjective { miou, neg_m_fp };

struct ThresholdRange {
    double start = 0.1;
    double stop = 0.9;  // inclusive
    double step = 0.1;

    std::vector<double> values() const;
};

// "a:b:step"
ThresholdRange parse_threshold_range(const std::string& text);

struct GridEntry {
    double t_slic = 0;
    double t_quick = 0;
    FusionMode fusion = FusionMode::fuse_union;
    double objective_value = 0;
};

struct GridSearchResult {
    GridObjective objective = GridObjective::miou;
    int num_classes = 0;
    std::vector<GridEntry> grid;
    GridEntry best;
};

// Evaluates refine_multiclass over the Cartesian grid against ground truth,
// pooling one confusion matrix per grid point across the manifest. Grid
// points whose objective is undefined (e.g. no true positives anywhere)
// score -inf instead of failing the sweep. Best entry maximizes the
// objective; exact ties resolve by (t_slic, t_quick, fusion) order.
GridSearchResult grid_search(const Manifest& manifest, const PerimeterCache& cache,
                             const ThresholdRange& t_slic_range, const ThresholdRange& t_quick_range,
                             const std::vector<FusionMode>& fusions, GridObjective objective,
                             int num_classes, int workers = 1);

std::string grid_result_to_json(const GridSearchResult& result);

const char* to_string(GridObjective o);
GridObjective objective_from_string(const std::string& s);

}  // namespace camref
