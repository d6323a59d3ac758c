#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cxrp::imaging {

// Row-major grayscale raster with physical pixel size. Intensities are kept
// as raw acquisition counts (no maxval scaling), converted to double.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;       // width * height, row-major
    double pixel_spacing = 1.0;     // mm per pixel, isotropic
    int bit_depth_origin = 16;      // informational only

    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }
};

struct RoiMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits; // nonzero = foreground

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    std::size_t count() const;
};

// Inclusive pixel rectangle.
struct Rect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
    bool operator==(const Rect&) const = default;
};

struct OverlapScores {
    double dice = 0.0;
    double jaccard = 0.0;
};

enum class ImageFormat { pgm16, png16, raw_sidecar };

// Detected from the file extension: .pgm, .png, .raw.
ImageFormat format_from_path(const std::string& path);

// Loads an image. For raw_sidecar the sidecar "<path>.meta" is required
// (keys: width, height, bit_depth, pixel_spacing_mm); for the other formats
// it is optional and may carry pixel_spacing_mm (dimension keys, when
// present, must agree with the file header). Accepted bit depths are
// 8, 10, 12, 14, 16. Without a sidecar, pixel_spacing defaults to 1.0 mm.
GrayImage load_image(const std::string& path, ImageFormat format);
GrayImage load_image(const std::string& path);

// 16-bit big-endian-sample PGM (P5), the repository's interchange format.
void save_image_pgm16(const std::string& path, const GrayImage& img,
                      double lo, double hi); // linear map [lo,hi] -> [0,65535]

// Masks are 8-bit PGM, nonzero = foreground.
RoiMask load_mask(const std::string& path);
void save_mask_pgm(const std::string& path, const RoiMask& mask);

// Zero mean, unit population standard deviation. Throws on constant images.
GrayImage standardize(const GrayImage& img);

// Bilinear resampling with pixel-center alignment: output pixel i samples the
// input at (i + 0.5) * in/out - 0.5, edge-clamped. Pixel spacing is rescaled
// so total physical area is preserved.
GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h);

// Nearest-neighbor mask resampling with the same pixel-center convention.
RoiMask resize_nearest(const RoiMask& mask, int out_w, int out_h);

// Tightest rectangle containing every foreground pixel. Throws on empty masks.
Rect bounding_box(const RoiMask& mask);

// dice = 2|A∩B| / (|A|+|B|), jaccard = |A∩B| / |A∪B|.
// Throws on dimension mismatch and when both masks are empty.
OverlapScores overlap_scores(const RoiMask& a, const RoiMask& b);

} // namespace cxrp::imaging
