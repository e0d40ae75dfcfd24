#include "camref/image.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace camref {

bool valid_image(const RasterImage& img) {
    return img.width >= 1 && img.height >= 1 &&
           img.data.size() == img.pixel_count() * 3;
}

// ---- color ------------------------------------------------------------------

namespace {

double srgb_to_linear(uint8_t c) {
    double v = c / 255.0;
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double delta3 = (6.0 / 29.0) * (6.0 / 29.0) * (6.0 / 29.0);
    if (t > delta3) return std::cbrt(t);
    return t / (3.0 * (6.0 / 29.0) * (6.0 / 29.0)) + 4.0 / 29.0;
}

}  // namespace

LabImage rgb_to_lab(const RasterImage& img) {
    if (!valid_image(img)) throw std::invalid_argument("rgb_to_lab: invalid image");
    // D65 reference white matching the sRGB matrix row sums.
    constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
    LabImage out;
    out.width = img.width;
    out.height = img.height;
    out.l.resize(img.pixel_count());
    out.a.resize(img.pixel_count());
    out.b.resize(img.pixel_count());
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        double r = srgb_to_linear(img.data[i * 3 + 0]);
        double g = srgb_to_linear(img.data[i * 3 + 1]);
        double b = srgb_to_linear(img.data[i * 3 + 2]);
        double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
        double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
        double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
        double fx = lab_f(x / xn), fy = lab_f(y / yn), fz = lab_f(z / zn);
        out.l[i] = 116.0 * fy - 16.0;
        out.a[i] = 500.0 * (fx - fy);
        out.b[i] = 200.0 * (fy - fz);
    }
    return out;
}

RasterImage render_overlay(const RasterImage& img, const LabelMap& mask, const Palette& palette) {
    if (img.width != mask.width || img.height != mask.height)
        throw std::invalid_argument("render_overlay: image/mask dimensions mismatch");
    RasterImage out = img;
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        uint8_t lab = mask.labels[i];
        if (lab == 0 || lab == LabelMap::kIgnore) continue;
        auto it = palette.find(lab);
        if (it == palette.end())
            throw std::runtime_error("render_overlay: no palette entry for class " +
                                     std::to_string(int(lab)));
        for (int c = 0; c < 3; ++c) {
            int blended = (int(img.data[i * 3 + c]) + int(it->second[c]) + 1) / 2;
            out.data[i * 3 + c] = uint8_t(blended);
        }
    }
    return out;
}

// ---- file helpers -----------------------------------------------------------

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void atomic_write_file(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        out.write(bytes.data(), std::streamsize(bytes.size()));
        if (!out) throw std::runtime_error("short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("rename " + tmp + " -> " + path + ": " + ec.message());
}

// ---- Netpbm parsing ---------------------------------------------------------

namespace {

[[noreturn]] void parse_fail(const std::string& path, size_t offset, const std::string& what) {
    throw std::runtime_error(path + ": " + what + " at byte " + std::to_string(offset));
}

struct PnmHeader {
    int width = 0;
    int height = 0;
    size_t payload_offset = 0;
};

// Parses "<magic>", then width, height, maxval separated by whitespace and
// optional '#' comments, then exactly one whitespace byte before the payload.
PnmHeader parse_pnm_header(const std::string& bytes, const std::string& path,
                           const char* magic) {
    size_t pos = 0;
    if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1]) {
        std::string found = bytes.substr(0, std::min<size_t>(2, bytes.size()));
        parse_fail(path, 0, std::string("wrong magic (expected ") + magic + ", got '" + found + "')");
    }
    pos = 2;
    auto skip_space = [&]() {
        bool any = false;
        for (;;) {
            while (pos < bytes.size() && std::isspace(uint8_t(bytes[pos]))) { ++pos; any = true; }
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
                continue;
            }
            return any;
        }
    };
    auto read_int = [&](const char* name) {
        if (!skip_space()) parse_fail(path, pos, std::string("missing separator before ") + name);
        if (pos >= bytes.size() || !std::isdigit(uint8_t(bytes[pos])))
            parse_fail(path, pos, std::string("expected digits for ") + name);
        long v = 0;
        while (pos < bytes.size() && std::isdigit(uint8_t(bytes[pos]))) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1'000'000'000L) parse_fail(path, pos, std::string(name) + " out of range");
            ++pos;
        }
        return int(v);
    };
    PnmHeader h;
    h.width = read_int("width");
    h.height = read_int("height");
    int maxval = read_int("maxval");
    if (h.width < 1 || h.height < 1) parse_fail(path, pos, "non-positive dimensions");
    if (maxval != 255) parse_fail(path, pos, "maxval " + std::to_string(maxval) + " (only 255 supported)");
    if (pos >= bytes.size() || !std::isspace(uint8_t(bytes[pos])))
        parse_fail(path, pos, "expected single whitespace before payload");
    ++pos;
    h.payload_offset = pos;
    return h;
}

void check_payload(const std::string& bytes, const std::string& path, const PnmHeader& h,
                   size_t bytes_per_pixel) {
    size_t need = size_t(h.width) * size_t(h.height) * bytes_per_pixel;
    size_t have = bytes.size() - h.payload_offset;
    if (have < need)
        parse_fail(path, bytes.size(),
                   "truncated payload (need " + std::to_string(need) + " bytes, have " +
                       std::to_string(have) + ")");
    if (have > need)
        parse_fail(path, h.payload_offset + need,
                   "trailing garbage (" + std::to_string(have - need) + " extra bytes)");
}

}  // namespace

RasterImage load_ppm(const std::string& path) {
    std::string bytes = read_file(path);
    PnmHeader h = parse_pnm_header(bytes, path, "P6");
    check_payload(bytes, path, h, 3);
    RasterImage img;
    img.width = h.width;
    img.height = h.height;
    img.data.assign(bytes.begin() + std::ptrdiff_t(h.payload_offset), bytes.end());
    return img;
}

std::string encode_ppm(const RasterImage& img) {
    if (!valid_image(img)) throw std::invalid_argument("encode_ppm: invalid image");
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.data.data()), img.data.size());
    return out;
}

void save_ppm(const RasterImage& img, const std::string& path) {
    atomic_write_file(path, encode_ppm(img));
}

LabelMap load_pgm(const std::string& path) {
    std::string bytes = read_file(path);
    PnmHeader h = parse_pnm_header(bytes, path, "P5");
    check_payload(bytes, path, h, 1);
    LabelMap map;
    map.width = h.width;
    map.height = h.height;
    map.labels.assign(bytes.begin() + std::ptrdiff_t(h.payload_offset), bytes.end());
    return map;
}

std::string encode_pgm(const LabelMap& map) {
    if (map.width < 1 || map.height < 1 ||
        map.labels.size() != size_t(map.width) * size_t(map.height))
        throw std::invalid_argument("encode_pgm: invalid label map");
    std::string out = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(map.labels.data()), map.labels.size());
    return out;
}

void save_pgm(const LabelMap& map, const std::string& path) {
    atomic_write_file(path, encode_pgm(map));
}

PerimeterMap load_perimeter_map(const std::string& path) {
    LabelMap raw = load_pgm(path);
    for (size_t i = 0; i < raw.labels.size(); ++i)
        if (raw.labels[i] != 0 && raw.labels[i] != 255)
            throw std::runtime_error(path + ": perimeter map holds value " +
                                     std::to_string(int(raw.labels[i])) + " at index " +
                                     std::to_string(i) + " (only 0/255 allowed)");
    return PerimeterMap{raw.width, raw.height, std::move(raw.labels)};
}

void save_perimeter_map(const PerimeterMap& pm, const std::string& path) {
    for (size_t i = 0; i < pm.values.size(); ++i)
        if (pm.values[i] != 0 && pm.values[i] != 255)
            throw std::invalid_argument("save_perimeter_map: value " +
                                        std::to_string(int(pm.values[i])) + " at index " +
                                        std::to_string(i) + " (only 0/255 allowed)");
    save_pgm(LabelMap{pm.width, pm.height, pm.values}, path);
}

// ---- SMF1 -------------------------------------------------------------------

namespace {

float float_from_le(const char* p) {
    uint32_t u = uint32_t(uint8_t(p[0])) | uint32_t(uint8_t(p[1])) << 8 |
                 uint32_t(uint8_t(p[2])) << 16 | uint32_t(uint8_t(p[3])) << 24;
    return std::bit_cast<float>(u);
}

void float_to_le(float f, std::string& out) {
    uint32_t u = std::bit_cast<uint32_t>(f);
    out.push_back(char(u & 0xff));
    out.push_back(char((u >> 8) & 0xff));
    out.push_back(char((u >> 16) & 0xff));
    out.push_back(char((u >> 24) & 0xff));
}

}  // namespace

ScoreMap load_smf(const std::string& path) {
    std::string bytes = read_file(path);
    size_t line_end = bytes.find('\n');
    if (line_end == std::string::npos) parse_fail(path, bytes.size(), "missing header line");
    std::istringstream head(bytes.substr(0, line_end));
    std::string magic;
    int w = 0, h = 0, n = 0;
    if (!(head >> magic >> w >> h >> n) || magic != "SMF1")
        parse_fail(path, 0, "bad SMF1 header line");
    if (w < 1 || h < 1 || n < 1) parse_fail(path, 0, "non-positive SMF1 dimensions");

    size_t ids_end = bytes.find('\n', line_end + 1);
    if (ids_end == std::string::npos) parse_fail(path, bytes.size(), "missing class id line");
    std::istringstream ids_line(bytes.substr(line_end + 1, ids_end - line_end - 1));
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i)
        if (!(ids_line >> ids[i])) parse_fail(path, line_end + 1, "expected " + std::to_string(n) + " class ids");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (ids[i] == ids[j]) parse_fail(path, line_end + 1, "duplicate class id " + std::to_string(ids[i]));

    size_t payload = ids_end + 1;
    size_t plane_px = size_t(w) * size_t(h);
    size_t need = plane_px * size_t(n) * 4;
    if (bytes.size() - payload != need)
        parse_fail(path, bytes.size(), "payload size mismatch (need " + std::to_string(need) +
                                           " bytes, have " + std::to_string(bytes.size() - payload) + ")");

    ScoreMap map;
    map.width = w;
    map.height = h;
    map.class_ids = ids;
    map.planes.resize(n);
    for (int p = 0; p < n; ++p) {
        map.planes[p].resize(plane_px);
        const char* base = bytes.data() + payload + size_t(p) * plane_px * 4;
        for (size_t i = 0; i < plane_px; ++i) {
            float f = float_from_le(base + i * 4);
            if (!std::isfinite(f))
                throw std::runtime_error(path + ": non-finite score at plane " + std::to_string(p) +
                                         " index " + std::to_string(i));
            if (f < 0.0f || f > 1.0f)
                throw std::runtime_error(path + ": score out of range at plane " + std::to_string(p) +
                                         " index " + std::to_string(i));
            map.planes[p][i] = f;
        }
    }
    return map;
}

std::string encode_smf(const ScoreMap& map) {
    int n = map.num_classes();
    if (map.width < 1 || map.height < 1 || n < 1 || map.planes.size() != size_t(n))
        throw std::invalid_argument("encode_smf: invalid score map");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (map.class_ids[size_t(i)] == map.class_ids[size_t(j)])
                throw std::invalid_argument("encode_smf: duplicate class id " +
                                            std::to_string(map.class_ids[size_t(i)]));
    size_t plane_px = size_t(map.width) * size_t(map.height);
    std::string out = "SMF1 " + std::to_string(map.width) + " " + std::to_string(map.height) +
                      " " + std::to_string(n) + "\n";
    for (int i = 0; i < n; ++i) {
        if (i) out += " ";
        out += std::to_string(map.class_ids[i]);
    }
    out += "\n";
    out.reserve(out.size() + plane_px * size_t(n) * 4);
    for (int p = 0; p < n; ++p) {
        if (map.planes[p].size() != plane_px)
            throw std::invalid_argument("encode_smf: plane " + std::to_string(p) + " size mismatch");
        for (size_t i = 0; i < plane_px; ++i) {
            float f = map.planes[p][i];
            if (!std::isfinite(f) || f < 0.0f || f > 1.0f)
                throw std::invalid_argument("encode_smf: score out of range at plane " +
                                            std::to_string(p) + " index " + std::to_string(i));
            float_to_le(f, out);
        }
    }
    return out;
}

void save_smf(const ScoreMap& map, const std::string& path) {
    atomic_write_file(path, encode_smf(map));
}

Palette load_palette(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    if (!j.is_object()) throw std::runtime_error(path + ": palette must be a JSON object");
    Palette pal;
    for (auto& [key, val] : j.items()) {
        int id = std::stoi(key);
        if (!val.is_array() || val.size() != 3)
            throw std::runtime_error(path + ": palette entry " + key + " must be [r,g,b]");
        pal[id] = {uint8_t(val[0].get<int>()), uint8_t(val[1].get<int>()), uint8_t(val[2].get<int>())};
    }
    return pal;
}

}  // namespace camref
