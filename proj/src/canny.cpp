#include "camref/canny.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace camref {

void CannyParams::validate() const {
    if (sigma <= 0) throw std::invalid_argument("canny: sigma must be positive");
    if (!(0 < low && low < high && high <= 1.0))
        throw std::invalid_argument("canny: thresholds must satisfy 0 < low < high <= 1");
}

Plane grayscale(const RasterImage& image, GrayMode mode) {
    if (!valid_image(image)) throw std::invalid_argument("grayscale: invalid image");
    Plane out;
    out.width = image.width;
    out.height = image.height;
    out.v.resize(image.pixel_count());
    if (mode == GrayMode::luma) {
        for (size_t i = 0; i < image.pixel_count(); ++i)
            out.v[i] = luma(image.data[i * 3], image.data[i * 3 + 1], image.data[i * 3 + 2]);
    } else {
        LabImage lab = rgb_to_lab(image);
        out.v = std::move(lab.l);
    }
    return out;
}

namespace {

// Mirror (reflect-101) index, folded until in range.
int mirror(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

}  // namespace

Plane gaussian_blur(const Plane& gray, double sigma) {
    if (sigma <= 0) throw std::invalid_argument("gaussian_blur: sigma must be positive");
    if (gray.width < 1 || gray.height < 1 || gray.v.size() != size_t(gray.width) * size_t(gray.height))
        throw std::invalid_argument("gaussian_blur: invalid plane");

    const int r = int(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<size_t>(2 * r + 1), 0.0);
    double sum = 0;
    for (int i = -r; i <= r; ++i) {
        k[size_t(i + r)] = std::exp(-double(i) * double(i) / (2.0 * sigma * sigma));
        sum += k[size_t(i + r)];
    }
    for (double& v : k) v /= sum;

    const int taps = (2 * r + 1) * (2 * r + 1);
    std::vector<double> w2d(static_cast<size_t>(taps), 0.0);
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            w2d[size_t((dy + r) * (2 * r + 1) + (dx + r))] = k[size_t(dy + r)] * k[size_t(dx + r)];

    double maxabs = 0;
    for (double v : gray.v) maxabs = std::max(maxabs, std::abs(v));

    Plane out;
    out.width = gray.width;
    out.height = gray.height;
    out.v.resize(gray.v.size());

    // Each weighted addend is rounded onto a fixed power-of-two grid and
    // accumulated in exact int64 arithmetic: the sum is then independent of
    // summation order, which makes the blur exactly equivariant under image
    // rotation. The shift is derived from rotation-invariant quantities only.
    int maxabs_bits = maxabs > 0 ? std::ilogb(maxabs) + 1 : 1;
    int taps_bits = std::ilogb(double(taps)) + 1;
    int shift = 62 - taps_bits - std::max(1, maxabs_bits);
    shift = std::min(shift, 40);
    const bool exact_path = shift >= 10 && maxabs > 0;
    const double scale = std::ldexp(1.0, shift);
    const double inv_scale = std::ldexp(1.0, -shift);

    const int w = gray.width, h = gray.height;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (exact_path) {
                int64_t acc = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    int sy = mirror(y + dy, h);
                    for (int dx = -r; dx <= r; ++dx) {
                        int sx = mirror(x + dx, w);
                        double p = w2d[size_t((dy + r) * (2 * r + 1) + (dx + r))] *
                                   gray.v[size_t(sy) * size_t(w) + size_t(sx)];
                        acc += std::llround(p * scale);
                    }
                }
                out.v[size_t(y) * size_t(w) + size_t(x)] = double(acc) * inv_scale;
            } else {
                double acc = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    int sy = mirror(y + dy, h);
                    for (int dx = -r; dx <= r; ++dx) {
                        int sx = mirror(x + dx, w);
                        acc += w2d[size_t((dy + r) * (2 * r + 1) + (dx + r))] *
                               gray.v[size_t(sy) * size_t(w) + size_t(sx)];
                    }
                }
                out.v[size_t(y) * size_t(w) + size_t(x)] = acc;
            }
        }
    return out;
}

Gradients sobel_gradients(const Plane& plane) {
    const int w = plane.width, h = plane.height;
    if (w < 3 || h < 3) throw std::invalid_argument("sobel_gradients: plane must be at least 3x3");

    Gradients g;
    for (Plane* p : {&g.magnitude, &g.orientation, &g.gx, &g.gy}) {
        p->width = w;
        p->height = h;
        p->v.resize(size_t(w) * size_t(h));
    }
    auto at = [&](int x, int y) { return plane.v[size_t(mirror(y, h)) * size_t(w) + size_t(mirror(x, w))]; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            double gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            size_t i = size_t(y) * size_t(w) + size_t(x);
            g.gx.v[i] = gx;
            g.gy.v[i] = gy;
            g.magnitude.v[i] = std::sqrt(gx * gx + gy * gy);
            g.orientation.v[i] = std::atan2(gy, gx);
        }
    return g;
}

Plane non_max_suppression(const Plane& magnitude, const Plane& orientation) {
    const int w = magnitude.width, h = magnitude.height;
    if (w != orientation.width || h != orientation.height)
        throw std::invalid_argument("non_max_suppression: plane dimensions mismatch");

    Plane out;
    out.width = w;
    out.height = h;
    out.v.assign(size_t(w) * size_t(h), 0.0);

    auto mag_at = [&](int x, int y) {
        if (x < 0 || x >= w || y < 0 || y >= h) return 0.0;
        return magnitude.v[size_t(y) * size_t(w) + size_t(x)];
    };

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = size_t(y) * size_t(w) + size_t(x);
            double deg = std::fmod(orientation.v[i] * 180.0 / M_PI, 180.0);
            if (deg < 0) deg += 180.0;
            // Neighbor pair along the quantized gradient normal; the pixel
            // earlier in raster order gets the strict comparison.
            int sx, sy, lx, ly;
            if (deg < 22.5 || deg >= 157.5) {
                sx = x - 1; sy = y;     lx = x + 1; ly = y;      // 0 deg
            } else if (deg < 67.5) {
                sx = x - 1; sy = y - 1; lx = x + 1; ly = y + 1;  // 45 deg
            } else if (deg < 112.5) {
                sx = x;     sy = y - 1; lx = x;     ly = y + 1;  // 90 deg
            } else {
                sx = x + 1; sy = y - 1; lx = x - 1; ly = y + 1;  // 135 deg
            }
            double m = magnitude.v[i];
            if (m > mag_at(sx, sy) && m >= mag_at(lx, ly)) out.v[i] = m;
        }
    return out;
}

PerimeterMap hysteresis(const Plane& suppressed, double low_abs, double high_abs) {
    if (!(0 < low_abs && low_abs < high_abs))
        throw std::invalid_argument("hysteresis: need 0 < low_abs < high_abs");
    const int w = suppressed.width, h = suppressed.height;
    PerimeterMap pm;
    pm.width = w;
    pm.height = h;
    pm.values.assign(size_t(w) * size_t(h), 0);

    std::vector<size_t> stack;
    for (size_t i = 0; i < suppressed.v.size(); ++i)
        if (suppressed.v[i] >= high_abs) {
            pm.values[i] = 255;
            stack.push_back(i);
        }
    while (!stack.empty()) {
        size_t i = stack.back();
        stack.pop_back();
        int x = int(i % size_t(w)), y = int(i / size_t(w));
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                size_t j = size_t(ny) * size_t(w) + size_t(nx);
                if (pm.values[j] == 0 && suppressed.v[j] >= low_abs) {
                    pm.values[j] = 255;
                    stack.push_back(j);
                }
            }
    }
    return pm;
}

PerimeterMap canny(const RasterImage& image, const CannyParams& params) {
    params.validate();
    Plane gray = grayscale(image, params.gray);
    Plane blurred = gaussian_blur(gray, params.sigma);
    const int w = blurred.width, h = blurred.height;
    if (w < 3 || h < 3) {
        // Too small for gradients: no interior structure, no edges.
        return PerimeterMap{w, h, std::vector<uint8_t>(size_t(w) * size_t(h), 0)};
    }
    Gradients g = sobel_gradients(blurred);
    double maxmag = 0;
    for (double m : g.magnitude.v) maxmag = std::max(maxmag, m);
    if (maxmag <= 0)
        return PerimeterMap{w, h, std::vector<uint8_t>(size_t(w) * size_t(h), 0)};
    Plane nms = non_max_suppression(g.magnitude, g.orientation);
    return hysteresis(nms, params.low * maxmag, params.high * maxmag);
}

}  // namespace camref
