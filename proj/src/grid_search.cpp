#include "camref/grid_search.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "camref/metrics.hpp"
#include "camref/parallel.hpp"
#include "json.hpp"

namespace camref {

const char* to_string(GridObjective o) { return o == GridObjective::miou ? "miou" : "neg_m_fp"; }

GridObjective objective_from_string(const std::string& s) {
    if (s == "miou") return GridObjective::miou;
    if (s == "neg_m_fp") return GridObjective::neg_m_fp;
    throw std::invalid_argument("unknown objective '" + s + "'");
}

std::vector<double> ThresholdRange::values() const {
    if (step <= 0) throw std::invalid_argument("threshold range: step must be positive");
    if (stop < start) throw std::invalid_argument("threshold range: stop < start");
    std::vector<double> out;
    for (int i = 0;; ++i) {
        double v = start + double(i) * step;
        if (v > stop + step * 0.5) break;
        if (!(v > 0 && v < 1))
            throw std::invalid_argument("threshold range: value " + std::to_string(v) +
                                        " outside (0,1)");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("threshold range: empty");
    return out;
}

ThresholdRange parse_threshold_range(const std::string& text) {
    ThresholdRange r;
    size_t a = text.find(':');
    size_t b = a == std::string::npos ? std::string::npos : text.find(':', a + 1);
    if (a == std::string::npos || b == std::string::npos)
        throw std::invalid_argument("threshold range '" + text + "' (expected a:b:step)");
    r.start = std::stod(text.substr(0, a));
    r.stop = std::stod(text.substr(a + 1, b - a - 1));
    r.step = std::stod(text.substr(b + 1));
    return r;
}

PerimeterCache build_perimeter_cache(const Manifest& manifest, const SimplifyParams& simplify_base,
                                     const CannyParams& canny_params, int workers) {
    PerimeterCache cache;
    cache.simplify_base = simplify_base;
    cache.canny_params = canny_params;
    std::vector<std::pair<PerimeterMap, PerimeterMap>> maps(manifest.entries.size());
    parallel_for(manifest.entries.size(), workers, [&](size_t i) {
        RasterImage img = load_ppm(manifest.entries[i].image_path);
        SimplifyParams sp = simplify_base;
        sp.method = SimplifyMethod::slic;
        PerimeterMap pm_slic = build_perimeter_map(img, sp, canny_params);
        sp.method = SimplifyMethod::quickshift;
        PerimeterMap pm_quick = build_perimeter_map(img, sp, canny_params);
        maps[i] = {std::move(pm_slic), std::move(pm_quick)};
    });
    for (size_t i = 0; i < manifest.entries.size(); ++i)
        cache.by_id[manifest.entries[i].id] = std::move(maps[i]);
    return cache;
}

GridSearchResult grid_search(const Manifest& manifest, const PerimeterCache& cache,
                             const ThresholdRange& t_slic_range, const ThresholdRange& t_quick_range,
                             const std::vector<FusionMode>& fusions, GridObjective objective,
                             int num_classes, int workers) {
    if (fusions.empty()) throw std::invalid_argument("grid_search: no fusion modes");
    if (manifest.entries.empty()) throw std::invalid_argument("grid_search: empty manifest");
    for (const auto& e : manifest.entries)
        if (!e.gt_path) throw std::runtime_error("grid_search: entry '" + e.id + "' has no ground truth");

    // Load every entry once; grid points share the data read-only.
    struct Loaded {
        ScoreMap scores;
        LabelMap gt;
        const PerimeterMap* pm_slic;
        const PerimeterMap* pm_quick;
    };
    std::vector<Loaded> data(manifest.entries.size());
    for (size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& e = manifest.entries[i];
        auto it = cache.by_id.find(e.id);
        if (it == cache.by_id.end())
            throw std::runtime_error("grid_search: no cached perimeter maps for '" + e.id + "'");
        data[i].scores = load_smf(e.score_path);
        data[i].gt = load_pgm(*e.gt_path);
        data[i].pm_slic = &it->second.first;
        data[i].pm_quick = &it->second.second;
    }

    std::vector<GridEntry> grid;
    for (double ts : t_slic_range.values())
        for (double tq : t_quick_range.values())
            for (FusionMode f : fusions) grid.push_back({ts, tq, f, 0.0});

    parallel_for(grid.size(), workers, [&](size_t gi) {
        RefineParams rp;
        rp.threshold_slic = grid[gi].t_slic;
        rp.threshold_quick = grid[gi].t_quick;
        rp.fusion = grid[gi].fusion;
        ConfusionMatrix cm(num_classes);
        for (const Loaded& d : data) {
            LabelMap pred = refine_multiclass(d.scores, *d.pm_slic, *d.pm_quick, rp);
            accumulate(cm, d.gt, pred);
        }
        double value;
        try {
            value = objective == GridObjective::miou ? miou(cm).miou : -overactivation(cm).m_fp;
        } catch (const std::runtime_error&) {
            value = -std::numeric_limits<double>::infinity();  // undefined point, never wins
        }
        grid[gi].objective_value = value;
    });

    GridSearchResult result;
    result.objective = objective;
    result.num_classes = num_classes;
    result.grid = std::move(grid);
    result.best = result.grid.front();
    for (const GridEntry& e : result.grid)
        if (e.objective_value > result.best.objective_value) result.best = e;
    return result;
}

std::string grid_result_to_json(const GridSearchResult& result) {
    auto entry_json = [](const GridEntry& e) {
        nlohmann::json j;
        j["t_slic"] = e.t_slic;
        j["t_quick"] = e.t_quick;
        j["fusion"] = to_string(e.fusion);
        j["objective_value"] = e.objective_value;
        return j;
    };
    nlohmann::json j;
    j["objective"] = to_string(result.objective);
    j["num_classes"] = result.num_classes;
    nlohmann::json grid = nlohmann::json::array();
    for (const GridEntry& e : result.grid) grid.push_back(entry_json(e));
    j["grid"] = std::move(grid);
    j["best"] = entry_json(result.best);
    return j.dump(2) + "\n";
}

}  // namespace camref
