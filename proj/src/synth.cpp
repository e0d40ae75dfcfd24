#include "camref/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "camref/canny.hpp"
#include "camref/rng.hpp"
#include "json.hpp"

namespace camref {

void SynthSpec::validate() const {
    if (image_count < 1) throw std::invalid_argument("synth: image_count must be >= 1");
    if (image_size < 32) throw std::invalid_argument("synth: image_size must be >= 32");
    if (max_shapes < 1 || max_shapes > 3)
        throw std::invalid_argument("synth: max_shapes must be in 1..3");
    if (texture_amplitude < 0 || texture_amplitude > 60)
        throw std::invalid_argument("synth: texture_amplitude must be in 0..60");
    if (cam_blur_sigma < 0) throw std::invalid_argument("synth: cam_blur_sigma must be >= 0");
    if (distractor_blob_count < 0) throw std::invalid_argument("synth: negative distractor count");
}

namespace {

struct Shape {
    int kind;  // class id
    int cx, cy;
    int rx, ry;  // half extents (rx==ry for disk/triangle)

    bool contains(int x, int y) const {
        int dx = x - cx, dy = y - cy;
        switch (kind) {
            case kClassDisk:
                return dx * dx + dy * dy <= rx * rx;
            case kClassRect:
                return std::abs(dx) <= rx && std::abs(dy) <= ry;
            default: {  // isoceles triangle, apex up
                if (dy < -ry || dy > ry) return false;
                // width grows linearly from apex to base
                int half = (dy + ry) * rx / (2 * ry);
                return std::abs(dx) <= half;
            }
        }
    }
    bool bbox_overlaps(const Shape& o, int margin) const {
        return std::abs(cx - o.cx) <= rx + o.rx + margin && std::abs(cy - o.cy) <= ry + o.ry + margin;
    }
    int bbox_dist(int x, int y) const {
        int dx = std::max(0, std::abs(x - cx) - rx);
        int dy = std::max(0, std::abs(y - cy) - ry);
        return std::max(dx, dy);
    }
};

const std::array<std::array<uint8_t, 3>, 4> kPaletteColors = {{
    {0, 0, 0},       // background placeholder
    {210, 55, 55},   // disk
    {45, 190, 75},   // rectangle
    {55, 85, 215},   // triangle
}};

// Shape fill colors come in dark and bright variants so every shape keeps a
// wide luma gap to the gray background; isoluminant color edges would be
// invisible to a luminance-based edge detector.
std::array<uint8_t, 3> shape_color(int kind, int bg_luma, Rng& rng) {
    static const std::array<std::array<uint8_t, 3>, 4> dark = {{
        {0, 0, 0}, {120, 25, 25}, {20, 100, 40}, {25, 35, 120}}};
    static const std::array<std::array<uint8_t, 3>, 4> bright = {{
        {0, 0, 0}, {255, 150, 150}, {150, 235, 160}, {160, 180, 255}}};
    std::array<uint8_t, 3> c = bg_luma >= 125 ? dark[size_t(kind)] : bright[size_t(kind)];
    for (auto& ch : c) ch = uint8_t(std::clamp(int(ch) + rng.next_int(-12, 12), 0, 255));
    return c;
}

std::vector<float> make_cam_plane(const LabelMap& gt, int class_id, double blur_sigma) {
    Plane p;
    p.width = gt.width;
    p.height = gt.height;
    p.v.resize(gt.labels.size());
    for (size_t i = 0; i < gt.labels.size(); ++i) p.v[i] = gt.labels[i] == class_id ? 1.0 : 0.0;
    if (blur_sigma > 0) {
        p = gaussian_blur(p, blur_sigma);
        double mx = 0;
        for (double v : p.v) mx = std::max(mx, v);
        if (mx > 0)
            for (double& v : p.v) v /= mx;
    }
    std::vector<float> out(p.v.size());
    for (size_t i = 0; i < p.v.size(); ++i) out[i] = float(std::clamp(p.v[i], 0.0, 1.0));
    return out;
}

void add_blob(std::vector<float>& plane, int w, int h, double bx, double by, double sigma,
              double peak) {
    int r = int(std::ceil(3 * sigma));
    int x0 = std::max(0, int(bx) - r), x1 = std::min(w - 1, int(bx) + r);
    int y0 = std::max(0, int(by) - r), y1 = std::min(h - 1, int(by) + r);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double d2 = (x - bx) * (x - bx) + (y - by) * (y - by);
            size_t i = size_t(y) * size_t(w) + size_t(x);
            double v = plane[i] + peak * std::exp(-d2 / (2 * sigma * sigma));
            plane[i] = float(std::clamp(v, 0.0, 1.0));
        }
}

// Gray background with per-pixel brightness jitter; returns the base luma.
RasterImage textured_background(int size, int amplitude, Rng& rng, int& bg_luma) {
    bg_luma = rng.next_int(100, 150);
    RasterImage img;
    img.width = size;
    img.height = size;
    img.data.resize(size_t(size) * size_t(size) * 3);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        int off = amplitude > 0 ? rng.next_int(-amplitude, amplitude) : 0;
        uint8_t v = uint8_t(std::clamp(bg_luma + off, 0, 255));
        img.data[i * 3] = img.data[i * 3 + 1] = img.data[i * 3 + 2] = v;
    }
    return img;
}

void paint_shape(RasterImage& img, LabelMap& gt, const Shape& s, const std::array<uint8_t, 3>& color) {
    for (int y = std::max(0, s.cy - s.ry); y <= std::min(img.height - 1, s.cy + s.ry); ++y)
        for (int x = std::max(0, s.cx - s.rx); x <= std::min(img.width - 1, s.cx + s.rx); ++x) {
            if (!s.contains(x, y)) continue;
            size_t i = size_t(y) * size_t(img.width) + size_t(x);
            for (int c = 0; c < 3; ++c) img.data[i * 3 + size_t(c)] = color[size_t(c)];
            gt.labels[i] = uint8_t(s.kind);
        }
}

std::string image_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "img%04d", index);
    return buf;
}

void write_dataset_files(const std::string& out_dir, const Manifest& manifest) {
    atomic_write_file(out_dir + "/manifest.json", encode_manifest(manifest));
    nlohmann::json palette, classes;
    classes["0"] = "bkg";
    classes["1"] = "disk";
    classes["2"] = "rect";
    classes["3"] = "tri";
    for (int c = 1; c <= 3; ++c)
        palette[std::to_string(c)] = {kPaletteColors[size_t(c)][0], kPaletteColors[size_t(c)][1],
                                      kPaletteColors[size_t(c)][2]};
    atomic_write_file(out_dir + "/palette.json", palette.dump(2) + "\n");
    atomic_write_file(out_dir + "/classes.json", classes.dump(2) + "\n");
}

void make_dataset_dirs(const std::string& out_dir) {
    for (const char* sub : {"", "/images", "/gt", "/scores"})
        std::filesystem::create_directories(out_dir + sub);
}

}  // namespace

Manifest synth_generate(const SynthSpec& spec, const std::string& out_dir) {
    spec.validate();
    make_dataset_dirs(out_dir);
    const int size = spec.image_size;
    const double scale = size / 128.0;
    Rng master(spec.rng_seed);

    Manifest manifest;
    for (int idx = 0; idx < spec.image_count; ++idx) {
        Rng rng = master.fork(uint64_t(idx));
        int bg_luma = 0;
        RasterImage img = textured_background(size, spec.texture_amplitude, rng, bg_luma);
        LabelMap gt{size, size, std::vector<uint8_t>(size_t(size) * size_t(size), 0)};

        int kinds[3] = {kClassDisk, kClassRect, kClassTriangle};
        for (int i = 2; i > 0; --i) std::swap(kinds[i], kinds[rng.next_int(0, i)]);
        int shape_count = rng.next_int(1, spec.max_shapes);

        const int margin = std::max(3, int(6 * scale));
        std::vector<Shape> shapes;
        for (int si = 0; si < shape_count; ++si) {
            Shape s;
            s.kind = kinds[si];
            bool placed = false;
            for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
                int rmin = std::max(6, int(14 * scale)), rmax = std::max(rmin + 1, int(24 * scale));
                s.rx = rng.next_int(rmin, rmax);
                s.ry = s.kind == kClassRect ? rng.next_int(rmin, rmax) : s.rx;
                int bx = s.rx + margin, by = s.ry + margin;
                if (size - 1 - bx <= bx || size - 1 - by <= by) break;
                s.cx = rng.next_int(bx, size - 1 - bx);
                s.cy = rng.next_int(by, size - 1 - by);
                placed = true;
                for (const Shape& prev : shapes)
                    if (s.bbox_overlaps(prev, margin)) placed = false;
            }
            if (!placed) continue;
            paint_shape(img, gt, s, shape_color(s.kind, bg_luma, rng));
            shapes.push_back(s);
        }
        // At least the first shape always fits by construction.
        if (shapes.empty()) throw std::logic_error("synth: failed to place any shape");

        ManifestEntry entry;
        entry.id = image_id(idx);
        for (const Shape& s : shapes) entry.classes_present.push_back(s.kind);
        std::sort(entry.classes_present.begin(), entry.classes_present.end());

        ScoreMap scores;
        scores.width = size;
        scores.height = size;
        scores.class_ids = entry.classes_present;
        for (int cid : entry.classes_present)
            scores.planes.push_back(make_cam_plane(gt, cid, spec.cam_blur_sigma));

        for (int b = 0; b < spec.distractor_blob_count; ++b) {
            double sigma = rng.next_real(3.0, 7.0) * scale;
            double peak = rng.next_real(0.6, 0.9);
            int clear = int(std::ceil(3 * sigma)) + margin;
            double bx = 0, by = 0;
            bool found = false;
            for (int attempt = 0; attempt < 80 && !found; ++attempt) {
                bx = rng.next_real(4.0, size - 5.0);
                by = rng.next_real(4.0, size - 5.0);
                found = true;
                for (const Shape& s : shapes)
                    if (s.bbox_dist(int(bx), int(by)) < clear) found = false;
            }
            if (!found) continue;  // crowded frame: drop the blob
            size_t plane_idx = rng.next_below(scores.planes.size());
            add_blob(scores.planes[plane_idx], size, size, bx, by, sigma, peak);
        }

        entry.image_path = "images/" + entry.id + ".ppm";
        entry.score_path = "scores/" + entry.id + ".smf";
        entry.gt_path = "gt/" + entry.id + ".pgm";
        save_ppm(img, out_dir + "/" + entry.image_path);
        save_pgm(gt, out_dir + "/" + *entry.gt_path);
        save_smf(scores, out_dir + "/" + entry.score_path);
        manifest.entries.push_back(std::move(entry));
    }
    write_dataset_files(out_dir, manifest);
    return manifest;
}

Manifest generate_bimodal_fixture(int image_count, int image_size, uint64_t seed,
                                  const std::string& out_dir) {
    if (image_count < 1 || image_size < 48)
        throw std::invalid_argument("bimodal fixture: need image_count >= 1, image_size >= 48");
    make_dataset_dirs(out_dir);
    const int size = image_size;
    Rng master(seed);

    Manifest manifest;
    for (int idx = 0; idx < image_count; ++idx) {
        Rng rng = master.fork(uint64_t(idx));
        int bg_luma = 0;
        RasterImage img = textured_background(size, 8, rng, bg_luma);
        LabelMap gt{size, size, std::vector<uint8_t>(size_t(size) * size_t(size), 0)};

        // Main object: a disk of class 1, kept in the upper-left band so the
        // decoy's corner never collides with it.
        Shape obj{kClassDisk, 0, 0, 0, 0};
        obj.rx = obj.ry = rng.next_int(size / 7, size / 5);
        obj.cx = rng.next_int(obj.rx + 4, std::max(obj.rx + 5, size * 3 / 8));
        obj.cy = rng.next_int(obj.ry + 4, std::max(obj.ry + 5, size * 3 / 8));
        paint_shape(img, gt, obj, shape_color(kClassDisk, bg_luma, rng));

        // Visible decoy disk in the lower-right corner; background in the
        // ground truth.
        Shape decoy{kClassDisk, 0, 0, 0, 0};
        decoy.rx = decoy.ry = std::max(4, size / 12);
        decoy.cx = decoy.cy = size - 6 - decoy.rx;
        LabelMap decoy_mask{size, size, std::vector<uint8_t>(gt.labels.size(), 0)};
        paint_shape(img, decoy_mask, decoy, shape_color(kClassTriangle, bg_luma, rng));

        // Bimodal scores: object band [0.74, 0.82], background band
        // [0.18, 0.26], decoy pinned at 0.25. One background pixel is forced
        // below 0.2 so thresholds from 0.2 up always poison the background.
        std::vector<float> plane(gt.labels.size());
        for (size_t i = 0; i < plane.size(); ++i) {
            if (gt.labels[i] == kClassDisk)
                plane[i] = float(0.74 + 0.08 * rng.next_unit());
            else if (decoy_mask.labels[i] != 0)
                plane[i] = 0.25f;
            else
                plane[i] = float(0.18 + 0.08 * rng.next_unit());
        }
        plane[size_t(size) + 1] = 0.19f;  // pixel (1,1)

        ManifestEntry entry;
        entry.id = image_id(idx);
        entry.classes_present = {kClassDisk};
        ScoreMap scores{size, size, {kClassDisk}, {std::move(plane)}};
        entry.image_path = "images/" + entry.id + ".ppm";
        entry.score_path = "scores/" + entry.id + ".smf";
        entry.gt_path = "gt/" + entry.id + ".pgm";
        save_ppm(img, out_dir + "/" + entry.image_path);
        save_pgm(gt, out_dir + "/" + *entry.gt_path);
        save_smf(scores, out_dir + "/" + entry.score_path);
        manifest.entries.push_back(std::move(entry));
    }
    write_dataset_files(out_dir, manifest);
    return manifest;
}

}  // namespace camref
