#pragma once

#include <vector>

#include "camref/image.hpp"

namespace camref {

// Row-major real-valued plane.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> v;

    double at(int x, int y) const { return v[size_t(y) * width + x]; }
    double& at(int x, int y) { return v[size_t(y) * width + x]; }
};

enum class GrayMode { luma, lab_l };

struct CannyParams {
    double sigma = 1.4;   // Gaussian std-dev in pixels
    double low = 0.1;     // hysteresis thresholds as fractions of max magnitude
    double high = 0.2;
    GrayMode gray = GrayMode::luma;

    void validate() const;
};

// Gaussian smoothing, kernel radius ceil(3*sigma), normalized to sum 1,
// mirrored borders. Summation is quantized so results are exactly invariant
// under 90-degree image rotation.
Plane gaussian_blur(const Plane& gray, double sigma);

struct Gradients {
    Plane magnitude;
    Plane orientation;  // atan2(gy, gx), radians
    Plane gx, gy;
};

// 3x3 Sobel pair with mirrored borders; plane must be at least 3x3.
Gradients sobel_gradients(const Plane& plane);

// Orientation quantized to 4 bins; a pixel survives only if its magnitude
// beats both neighbors along the quantized normal. Exact ties keep the pixel
// earlier in raster order, which thins symmetric double-wide ridges to a
// single line.
Plane non_max_suppression(const Plane& magnitude, const Plane& orientation);

// Pixels >= high_abs seed edges; pixels >= low_abs that are 8-connected to a
// seed join them.
PerimeterMap hysteresis(const Plane& suppressed, double low_abs, double high_abs);

// Full pipeline: grayscale -> blur -> Sobel -> NMS -> hysteresis, with
// low_abs = low * maxmag, high_abs = high * maxmag.
PerimeterMap canny(const RasterImage& image, const CannyParams& params);

Plane grayscale(const RasterImage& image, GrayMode mode);

}  // namespace camref
