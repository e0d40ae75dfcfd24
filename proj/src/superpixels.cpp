#include "camref/superpixels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>

namespace camref {

void SimplifyParams::validate() const {
    if (q < 2) throw std::invalid_argument("simplify: q must be >= 2");
    if (slic_k < q) throw std::invalid_argument("simplify: slic_k must be >= q");
    if (slic_compactness <= 0 || slic_iters < 1)
        throw std::invalid_argument("simplify: slic parameters must be positive");
    if (qs_kernel_size <= 0 || qs_max_dist <= 0)
        throw std::invalid_argument("simplify: quickshift parameters must be positive");
}

const char* to_string(SimplifyMethod m) {
    return m == SimplifyMethod::slic ? "slic" : "quickshift";
}

SimplifyMethod simplify_method_from_string(const std::string& s) {
    if (s == "slic") return SimplifyMethod::slic;
    if (s == "quickshift") return SimplifyMethod::quickshift;
    throw std::invalid_argument("unknown simplify method '" + s + "'");
}

namespace {

void check_pair(const RasterImage& image, const SegmentMap& seg, const char* op) {
    if (!valid_image(image)) throw std::invalid_argument(std::string(op) + ": invalid image");
    if (image.width != seg.width || image.height != seg.height)
        throw std::invalid_argument(std::string(op) + ": image/segment dimensions mismatch");
}

// Raster-first-occurrence remap to contiguous ids.
SegmentMap compact_ids(int width, int height, const std::vector<int>& raw, int max_id_bound) {
    std::vector<int> remap(size_t(max_id_bound), -1);
    SegmentMap out;
    out.width = width;
    out.height = height;
    out.segments.resize(raw.size());
    int next = 0;
    for (size_t i = 0; i < raw.size(); ++i) {
        int r = raw[i];
        if (remap[size_t(r)] < 0) remap[size_t(r)] = next++;
        out.segments[i] = remap[size_t(r)];
    }
    out.num_segments = next;
    return out;
}

struct Adjacency {
    // 4-adjacency neighbor sets keyed by segment id.
    std::vector<std::set<int>> nb;

    explicit Adjacency(const SegmentMap& seg) : nb(size_t(seg.num_segments)) {
        for (int y = 0; y < seg.height; ++y)
            for (int x = 0; x < seg.width; ++x) {
                int a = seg.at(x, y);
                if (x + 1 < seg.width) link(a, seg.at(x + 1, y));
                if (y + 1 < seg.height) link(a, seg.at(x, y + 1));
            }
    }
    void link(int a, int b) {
        if (a == b) return;
        nb[size_t(a)].insert(b);
        nb[size_t(b)].insert(a);
    }
};

int find_root(std::vector<int>& up, int x) {
    while (up[size_t(x)] != x) {
        up[size_t(x)] = up[size_t(up[size_t(x)])];
        x = up[size_t(x)];
    }
    return x;
}

}  // namespace

// ---- SLIC -------------------------------------------------------------------

namespace {

struct SlicCenter {
    double l, a, b, x, y;
};

double slic_dist2(const SlicCenter& c, const LabImage& lab, size_t i, int px, int py,
                  double spatial_w2) {
    double dl = lab.l[i] - c.l, da = lab.a[i] - c.a, db = lab.b[i] - c.b;
    double dx = px - c.x, dy = py - c.y;
    return dl * dl + da * da + db * db + spatial_w2 * (dx * dx + dy * dy);
}

}  // namespace

SegmentMap slic(const RasterImage& image, const SimplifyParams& params) {
    params.validate();
    if (!valid_image(image)) throw std::invalid_argument("slic: invalid image");
    const int w = image.width, h = image.height;
    const size_t n = size_t(w) * size_t(h);
    if (size_t(params.slic_k) > n)
        throw std::invalid_argument("slic: slic_k exceeds pixel count (degenerate image)");

    const LabImage lab = rgb_to_lab(image);
    const double S = std::sqrt(double(w) * double(h) / double(params.slic_k));
    const double spatial_w = params.slic_compactness / S;
    const double spatial_w2 = spatial_w * spatial_w;

    // Regular grid of roughly slic_k cells; grown one axis at a time when the
    // rounded grid falls short.
    int nx = std::max(1, int(std::lround(double(w) / S)));
    int ny = std::max(1, int(std::lround(double(h) / S)));
    while (nx * ny < params.slic_k && (nx < w || ny < h)) {
        double sx = double(w) / nx, sy = double(h) / ny;
        if ((sx >= sy && nx < w) || ny >= h)
            ++nx;
        else
            ++ny;
    }

    // Gradient magnitude for the 3x3 seed perturbation.
    auto grad_at = [&](int x, int y) {
        auto idx = [&](int xx, int yy) {
            xx = std::clamp(xx, 0, w - 1);
            yy = std::clamp(yy, 0, h - 1);
            return size_t(yy) * size_t(w) + size_t(xx);
        };
        size_t xr = idx(x + 1, y), xl = idx(x - 1, y), yd = idx(x, y + 1), yu = idx(x, y - 1);
        double gx = (lab.l[xr] - lab.l[xl]) * (lab.l[xr] - lab.l[xl]) +
                    (lab.a[xr] - lab.a[xl]) * (lab.a[xr] - lab.a[xl]) +
                    (lab.b[xr] - lab.b[xl]) * (lab.b[xr] - lab.b[xl]);
        double gy = (lab.l[yd] - lab.l[yu]) * (lab.l[yd] - lab.l[yu]) +
                    (lab.a[yd] - lab.a[yu]) * (lab.a[yd] - lab.a[yu]) +
                    (lab.b[yd] - lab.b[yu]) * (lab.b[yd] - lab.b[yu]);
        return gx + gy;
    };

    std::vector<SlicCenter> centers;
    centers.reserve(size_t(nx) * size_t(ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            int sx = std::clamp(int(std::floor((i + 0.5) * double(w) / nx - 0.5)), 0, w - 1);
            int sy = std::clamp(int(std::floor((j + 0.5) * double(h) / ny - 0.5)), 0, h - 1);
            int bx = sx, by = sy;
            double bg = grad_at(sx, sy);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int px = sx + dx, py = sy + dy;
                    if (px < 0 || px >= w || py < 0 || py >= h) continue;
                    double g = grad_at(px, py);
                    if (g < bg) {
                        bg = g;
                        bx = px;
                        by = py;
                    }
                }
            size_t bi = size_t(by) * size_t(w) + size_t(bx);
            centers.push_back({lab.l[bi], lab.a[bi], lab.b[bi], double(bx), double(by)});
        }
    const int k = int(centers.size());

    std::vector<int> label(n, -1);
    std::vector<double> dist(n);
    [[maybe_unused]] double prev_energy = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < params.slic_iters; ++iter) {
        // Seed each pixel's best distance with its current assignment so a
        // pixel only ever switches to a strictly closer center.
        for (size_t i = 0; i < n; ++i) {
            if (label[i] < 0) {
                dist[i] = std::numeric_limits<double>::infinity();
            } else {
                int px = int(i % size_t(w)), py = int(i / size_t(w));
                dist[i] = slic_dist2(centers[size_t(label[i])], lab, i, px, py, spatial_w2);
            }
        }
        for (int c = 0; c < k; ++c) {
            const SlicCenter& ctr = centers[size_t(c)];
            int x0 = std::max(0, int(std::floor(ctr.x - S)));
            int x1 = std::min(w - 1, int(std::ceil(ctr.x + S)));
            int y0 = std::max(0, int(std::floor(ctr.y - S)));
            int y1 = std::min(h - 1, int(std::ceil(ctr.y + S)));
            for (int py = y0; py <= y1; ++py)
                for (int px = x0; px <= x1; ++px) {
                    size_t i = size_t(py) * size_t(w) + size_t(px);
                    double d = slic_dist2(ctr, lab, i, px, py, spatial_w2);
                    if (d < dist[i]) {
                        dist[i] = d;
                        label[i] = c;
                    }
                }
        }
        // Rarely, drifting windows leave a pixel uncovered; assign it globally.
        for (size_t i = 0; i < n; ++i) {
            if (label[i] >= 0) continue;
            int px = int(i % size_t(w)), py = int(i / size_t(w));
            for (int c = 0; c < k; ++c) {
                double d = slic_dist2(centers[size_t(c)], lab, i, px, py, spatial_w2);
                if (d < dist[i]) {
                    dist[i] = d;
                    label[i] = c;
                }
            }
        }

#ifndef NDEBUG
        double energy = 0;
        for (size_t i = 0; i < n; ++i) energy += dist[i];
        assert(energy <= prev_energy * (1.0 + 1e-9) + 1e-9);
        prev_energy = energy;
#endif

        // Update step: per-cluster means, accumulated in raster order.
        std::vector<double> acc(size_t(k) * 5, 0.0);
        std::vector<int64_t> count(size_t(k), 0);
        for (size_t i = 0; i < n; ++i) {
            int c = label[i];
            double* a = &acc[size_t(c) * 5];
            a[0] += lab.l[i];
            a[1] += lab.a[i];
            a[2] += lab.b[i];
            a[3] += double(i % size_t(w));
            a[4] += double(i / size_t(w));
            ++count[size_t(c)];
        }
        for (int c = 0; c < k; ++c) {
            if (count[size_t(c)] == 0) continue;  // empty cluster keeps its center
            double inv = 1.0 / double(count[size_t(c)]);
            const double* a = &acc[size_t(c) * 5];
            centers[size_t(c)] = {a[0] * inv, a[1] * inv, a[2] * inv, a[3] * inv, a[4] * inv};
        }
    }

    SegmentMap raw = compact_ids(w, h, label, k);
    return enforce_connectivity(raw);
}

// ---- Quickshift ---------------------------------------------------------------

QuickshiftForest quickshift_forest(const RasterImage& image, const SimplifyParams& params) {
    params.validate();
    if (!valid_image(image)) throw std::invalid_argument("quickshift: invalid image");
    const int w = image.width, h = image.height;
    const size_t n = size_t(w) * size_t(h);
    const LabImage lab = rgb_to_lab(image);

    const double max_dist = params.qs_max_dist;
    const double max_dist2 = max_dist * max_dist;
    const double inv_2sigma2 = 1.0 / (2.0 * params.qs_kernel_size * params.qs_kernel_size);
    const int r = int(std::floor(max_dist));

    QuickshiftForest out;
    out.density.assign(n, 0.0);
    out.parent.assign(n, -1);

    auto joint_dist2 = [&](size_t i, size_t j, double dxy2) {
        double dl = lab.l[i] - lab.l[j], da = lab.a[i] - lab.a[j], db = lab.b[i] - lab.b[j];
        return dl * dl + da * da + db * db + dxy2;
    };

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = size_t(y) * size_t(w) + size_t(x);
            double dens = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                int ny = y + dy;
                if (ny < 0 || ny >= h) continue;
                for (int dx = -r; dx <= r; ++dx) {
                    int nx = x + dx;
                    if (nx < 0 || nx >= w) continue;
                    double dxy2 = double(dx) * dx + double(dy) * dy;
                    if (dxy2 > max_dist2) continue;
                    size_t j = size_t(ny) * size_t(w) + size_t(nx);
                    dens += std::exp(-joint_dist2(i, j, dxy2) * inv_2sigma2);
                }
            }
            out.density[i] = dens;
        }

    // Link each pixel to its joint-nearest strictly denser neighbor; window
    // scanned in raster order so distance ties resolve deterministically.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = size_t(y) * size_t(w) + size_t(x);
            double best = std::numeric_limits<double>::infinity();
            int best_j = -1;
            for (int dy = -r; dy <= r; ++dy) {
                int ny = y + dy;
                if (ny < 0 || ny >= h) continue;
                for (int dx = -r; dx <= r; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    int nx = x + dx;
                    if (nx < 0 || nx >= w) continue;
                    double dxy2 = double(dx) * dx + double(dy) * dy;
                    if (dxy2 > max_dist2) continue;
                    size_t j = size_t(ny) * size_t(w) + size_t(nx);
                    if (!(out.density[j] > out.density[i])) continue;
                    double d = joint_dist2(i, j, dxy2);
                    if (d > max_dist2) continue;  // joint-distance cutoff
                    if (d < best) {
                        best = d;
                        best_j = int(j);
                    }
                }
            }
            out.parent[i] = best_j;
        }

#ifndef NDEBUG
    for (size_t i = 0; i < n; ++i)
        if (out.parent[i] >= 0) assert(out.density[size_t(out.parent[i])] > out.density[i]);
#endif

    // Trees of the forest become segments, ids in raster order of roots.
    std::vector<int> raw(n, -1);
    std::vector<size_t> chain;
    for (size_t i = 0; i < n; ++i) {
        if (raw[i] >= 0) continue;
        chain.clear();
        size_t p = i;
        while (raw[p] < 0 && out.parent[p] >= 0) {
            chain.push_back(p);
            p = size_t(out.parent[p]);
        }
        int id = raw[p] >= 0 ? raw[p] : int(p);  // provisional: root linear index
        if (raw[p] < 0) raw[p] = id;
        for (size_t c : chain) raw[c] = id;
    }
    out.segments = compact_ids(w, h, raw, int(n));
    return out;
}

SegmentMap quickshift(const RasterImage& image, const SimplifyParams& params) {
    return quickshift_forest(image, params).segments;
}

// ---- connectivity + merging ---------------------------------------------------

SegmentMap enforce_connectivity(const SegmentMap& seg) {
    const int w = seg.width, h = seg.height;
    const size_t n = size_t(w) * size_t(h);
    if (n == 0 || seg.segments.size() != n || seg.num_segments < 1)
        throw std::invalid_argument("enforce_connectivity: invalid segment map");

    // Split: BFS each 4-connected same-label component, ids in raster order.
    std::vector<int> comp(n, -1);
    std::vector<int64_t> comp_size;
    std::queue<size_t> bfs;
    for (size_t s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        int id = int(comp_size.size());
        comp_size.push_back(0);
        comp[s] = id;
        bfs.push(s);
        while (!bfs.empty()) {
            size_t i = bfs.front();
            bfs.pop();
            ++comp_size[size_t(id)];
            int x = int(i % size_t(w)), y = int(i / size_t(w));
            const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                int nx = x + dx[d], ny = y + dy[d];
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                size_t j = size_t(ny) * size_t(w) + size_t(nx);
                if (comp[j] < 0 && seg.segments[j] == seg.segments[i]) {
                    comp[j] = id;
                    bfs.push(j);
                }
            }
        }
    }
    const int m = int(comp_size.size());

    SegmentMap split;
    split.width = w;
    split.height = h;
    split.segments = comp;
    split.num_segments = m;
    Adjacency adj(split);

    const double threshold = double(w) * double(h) / (4.0 * double(seg.num_segments));
    std::vector<int> up(static_cast<size_t>(m), 0);
    for (int i = 0; i < m; ++i) up[size_t(i)] = i;

    for (int c = 0; c < m; ++c) {
        if (find_root(up, c) != c) continue;
        if (double(comp_size[size_t(c)]) >= threshold) continue;
        // Largest current 4-neighbor, ties to the lower id.
        int best = -1;
        int64_t best_size = -1;
        std::set<int> roots;
        for (int nbc : adj.nb[size_t(c)]) roots.insert(find_root(up, nbc));
        roots.erase(c);
        for (int rt : roots) {
            if (comp_size[size_t(rt)] > best_size) {
                best_size = comp_size[size_t(rt)];
                best = rt;
            }
        }
        if (best < 0) continue;  // whole image is one component
        up[size_t(c)] = best;
        comp_size[size_t(best)] += comp_size[size_t(c)];
        adj.nb[size_t(best)].insert(adj.nb[size_t(c)].begin(), adj.nb[size_t(c)].end());
        adj.nb[size_t(best)].erase(best);
        adj.nb[size_t(best)].erase(c);
    }

    std::vector<int> rooted(n);
    for (size_t i = 0; i < n; ++i) rooted[i] = find_root(up, comp[i]);
    return compact_ids(w, h, rooted, m);
}

SegmentMap merge_to_cap(const RasterImage& image, const SegmentMap& seg, int q) {
    check_pair(image, seg, "merge_to_cap");
    if (q < 2) throw std::invalid_argument("merge_to_cap: q must be >= 2");
    if (seg.num_segments <= q) return seg;

    const size_t n = seg.segments.size();
    const int m = seg.num_segments;
    const LabImage lab = rgb_to_lab(image);

    std::vector<int64_t> size(size_t(m), 0);
    std::vector<double> suml(size_t(m), 0), suma(size_t(m), 0), sumb(size_t(m), 0);
    for (size_t i = 0; i < n; ++i) {
        int s = seg.segments[i];
        ++size[size_t(s)];
        suml[size_t(s)] += lab.l[i];
        suma[size_t(s)] += lab.a[i];
        sumb[size_t(s)] += lab.b[i];
    }
    Adjacency adj(seg);
    std::vector<int> up(static_cast<size_t>(m), 0);
    for (int i = 0; i < m; ++i) up[size_t(i)] = i;
    std::vector<char> alive(size_t(m), 1);
    int alive_count = m;

    auto mean_dist = [&](int a, int b) {
        double la = suml[size_t(a)] / double(size[size_t(a)]), lb = suml[size_t(b)] / double(size[size_t(b)]);
        double aa = suma[size_t(a)] / double(size[size_t(a)]), ab = suma[size_t(b)] / double(size[size_t(b)]);
        double ba = sumb[size_t(a)] / double(size[size_t(a)]), bb = sumb[size_t(b)] / double(size[size_t(b)]);
        return (la - lb) * (la - lb) + (aa - ab) * (aa - ab) + (ba - bb) * (ba - bb);
    };

    while (alive_count > q) {
        // Smallest alive segment, ties to the lower id.
        int victim = -1;
        int64_t victim_size = std::numeric_limits<int64_t>::max();
        for (int s = 0; s < m; ++s)
            if (alive[size_t(s)] && size[size_t(s)] < victim_size) {
                victim_size = size[size_t(s)];
                victim = s;
            }

        // Closest-color 4-neighbor, ties to the lower id.
        std::set<int> roots;
        for (int nbp : adj.nb[size_t(victim)]) {
            int rt = find_root(up, nbp);
            if (rt != victim) roots.insert(rt);
        }
        int target = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int rt : roots) {
            double d = mean_dist(victim, rt);
            if (d < best) {
                best = d;
                target = rt;
            }
        }
        if (target < 0) break;  // no neighbor: degenerate single-region map

        up[size_t(victim)] = target;
        alive[size_t(victim)] = 0;
        --alive_count;
        size[size_t(target)] += size[size_t(victim)];
        suml[size_t(target)] += suml[size_t(victim)];
        suma[size_t(target)] += suma[size_t(victim)];
        sumb[size_t(target)] += sumb[size_t(victim)];
        adj.nb[size_t(target)].insert(adj.nb[size_t(victim)].begin(), adj.nb[size_t(victim)].end());
        adj.nb[size_t(target)].erase(target);
        adj.nb[size_t(target)].erase(victim);
    }

    std::vector<int> rooted(n);
    for (size_t i = 0; i < n; ++i) rooted[i] = find_root(up, seg.segments[i]);
    return compact_ids(seg.width, seg.height, rooted, m);
}

RasterImage flatten(const RasterImage& image, const SegmentMap& seg) {
    check_pair(image, seg, "flatten");
    const size_t n = image.pixel_count();
    std::vector<uint64_t> sum(size_t(seg.num_segments) * 3, 0);
    std::vector<uint64_t> count(size_t(seg.num_segments), 0);
    for (size_t i = 0; i < n; ++i) {
        int s = seg.segments[i];
        for (int c = 0; c < 3; ++c) sum[size_t(s) * 3 + size_t(c)] += image.data[i * 3 + size_t(c)];
        ++count[size_t(s)];
    }
    RasterImage out = image;
    for (size_t i = 0; i < n; ++i) {
        int s = seg.segments[i];
        for (int c = 0; c < 3; ++c) {
            uint64_t cnt = count[size_t(s)];
            uint64_t v = (2 * sum[size_t(s) * 3 + size_t(c)] + cnt) / (2 * cnt);  // mean, half-up
            out.data[i * 3 + size_t(c)] = uint8_t(v);
        }
    }
    return out;
}

SegmentMap simplify(const RasterImage& image, const SimplifyParams& params) {
    params.validate();
    SegmentMap seg;
    if (params.method == SimplifyMethod::slic) {
        seg = slic(image, params);  // slic already enforces connectivity
    } else {
        seg = enforce_connectivity(quickshift(image, params));
    }
    return merge_to_cap(image, seg, params.q);
}

// ---- serialization ------------------------------------------------------------

void save_segment_map(const SegmentMap& seg, const std::string& path) {
    if (seg.num_segments <= 255) {
        LabelMap as_bytes;
        as_bytes.width = seg.width;
        as_bytes.height = seg.height;
        as_bytes.labels.resize(seg.segments.size());
        for (size_t i = 0; i < seg.segments.size(); ++i)
            as_bytes.labels[i] = uint8_t(seg.segments[i]);
        save_pgm(as_bytes, path);
        return;
    }
    std::string out = "SEG1 " + std::to_string(seg.width) + " " + std::to_string(seg.height) + "\n";
    out.reserve(out.size() + seg.segments.size() * 4);
    for (int id : seg.segments) {
        uint32_t u = uint32_t(id);
        out.push_back(char(u & 0xff));
        out.push_back(char((u >> 8) & 0xff));
        out.push_back(char((u >> 16) & 0xff));
        out.push_back(char((u >> 24) & 0xff));
    }
    atomic_write_file(path, out);
}

namespace {

SegmentMap validate_contiguous(int w, int h, std::vector<int> ids, const std::string& path) {
    int max_id = -1;
    for (int v : ids) {
        if (v < 0) throw std::runtime_error(path + ": negative segment id");
        max_id = std::max(max_id, v);
    }
    std::vector<char> seen(size_t(max_id) + 1, 0);
    for (int v : ids) seen[size_t(v)] = 1;
    for (int s = 0; s <= max_id; ++s)
        if (!seen[size_t(s)])
            throw std::runtime_error(path + ": segment ids not contiguous (missing " +
                                     std::to_string(s) + ")");
    return SegmentMap{w, h, std::move(ids), max_id + 1};
}

}  // namespace

SegmentMap load_segment_map(const std::string& path) {
    std::string bytes = read_file(path);
    if (bytes.rfind("P5", 0) == 0) {
        LabelMap raw = load_pgm(path);
        std::vector<int> ids(raw.labels.begin(), raw.labels.end());
        return validate_contiguous(raw.width, raw.height, std::move(ids), path);
    }
    if (bytes.rfind("SEG1 ", 0) != 0) throw std::runtime_error(path + ": wrong magic at byte 0");
    size_t line_end = bytes.find('\n');
    if (line_end == std::string::npos) throw std::runtime_error(path + ": missing SEG1 header line");
    int w = 0, h = 0;
    if (std::sscanf(bytes.c_str() + 5, "%d %d", &w, &h) != 2 || w < 1 || h < 1)
        throw std::runtime_error(path + ": bad SEG1 dimensions");
    size_t n = size_t(w) * size_t(h);
    if (bytes.size() - line_end - 1 != n * 4)
        throw std::runtime_error(path + ": SEG1 payload size mismatch");
    std::vector<int> ids(n);
    const char* p = bytes.data() + line_end + 1;
    for (size_t i = 0; i < n; ++i) {
        uint32_t u = uint32_t(uint8_t(p[i * 4])) | uint32_t(uint8_t(p[i * 4 + 1])) << 8 |
                     uint32_t(uint8_t(p[i * 4 + 2])) << 16 | uint32_t(uint8_t(p[i * 4 + 3])) << 24;
        ids[i] = int(u);
    }
    return validate_contiguous(w, h, std::move(ids), path);
}

}  // namespace camref
