#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace camref {

// Row-major 8-bit RGB image.
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;  // width*height*3, RGB triples

    size_t pixel_count() const { return size_t(width) * size_t(height); }
    const uint8_t* rgb(int x, int y) const { return &data[(size_t(y) * width + x) * 3]; }
    uint8_t* rgb(int x, int y) { return &data[(size_t(y) * width + x) * 3]; }
};

// Per-pixel class labels, one byte each. 255 marks ignore pixels.
struct LabelMap {
    static constexpr uint8_t kIgnore = 255;

    int width = 0;
    int height = 0;
    std::vector<uint8_t> labels;  // width*height

    uint8_t at(int x, int y) const { return labels[size_t(y) * width + x]; }
    uint8_t& at(int x, int y) { return labels[size_t(y) * width + x]; }
};

// Binary edge indicator, values restricted to {0, 255} (255 = edge).
struct PerimeterMap {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> values;  // width*height

    bool is_edge(int x, int y) const { return values[size_t(y) * width + x] != 0; }
};

// Per-class activation planes, scores in [0,1]. Plane k belongs to
// dataset class class_ids[k].
struct ScoreMap {
    int width = 0;
    int height = 0;
    std::vector<int> class_ids;
    std::vector<std::vector<float>> planes;  // one row-major plane per class

    int num_classes() const { return int(class_ids.size()); }
};

struct PixelCoord {
    int x = 0;
    int y = 0;
};

// CIELAB planes (D65), L in [0,100].
struct LabImage {
    int width = 0;
    int height = 0;
    std::vector<double> l, a, b;
};

bool valid_image(const RasterImage& img);

// sRGB (D65) -> CIELAB per the standard formulas.
LabImage rgb_to_lab(const RasterImage& img);

// Rec.601 luma, used as the default grayscale input for edge detection.
inline double luma(uint8_t r, uint8_t g, uint8_t b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

// 50% alpha blend of palette colors over the image wherever the mask holds a
// foreground class. Background (0) and ignore (255) pixels pass through.
// Throws if a class id has no palette entry or dimensions mismatch.
using Palette = std::map<int, std::array<uint8_t, 3>>;
RasterImage render_overlay(const RasterImage& img, const LabelMap& mask, const Palette& palette);

// ---- Netpbm / SMF1 file I/O -------------------------------------------------
//
// All loaders reject malformed input outright; parse errors carry the byte
// offset. All savers write canonical headers ("P6\n<w> <h>\n255\n") so that
// save(load(f)) is byte-identical for canonically encoded files, and go
// through a temp-file + rename so interrupted runs never leave partial files.

RasterImage load_ppm(const std::string& path);
void save_ppm(const RasterImage& img, const std::string& path);

LabelMap load_pgm(const std::string& path);
void save_pgm(const LabelMap& map, const std::string& path);

PerimeterMap load_perimeter_map(const std::string& path);
void save_perimeter_map(const PerimeterMap& pm, const std::string& path);

// SMF1 float raster: "SMF1 <w> <h> <n>\n<id_0> ... <id_{n-1}>\n" followed by
// n planes of w*h little-endian IEEE-754 floats, plane-major. Scores must be
// finite and inside [0,1]; anything else is rejected, never clamped.
ScoreMap load_smf(const std::string& path);
void save_smf(const ScoreMap& map, const std::string& path);

// Encoders used by the savers above; exposed for byte-level tests.
std::string encode_ppm(const RasterImage& img);
std::string encode_pgm(const LabelMap& map);
std::string encode_smf(const ScoreMap& map);

// Whole-file helpers. atomic_write_file writes to "<path>.tmp" then renames.
std::string read_file(const std::string& path);
void atomic_write_file(const std::string& path, const std::string& bytes);

Palette load_palette(const std::string& path);

}  // namespace camref
