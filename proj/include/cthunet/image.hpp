#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cthunet {

// Single-channel 2-D raster, row-major.
template <typename T>
struct Image {
    int rows = 0, cols = 0;
    std::vector<T> v;

    Image() = default;
    Image(int r, int c, T init = T{}) : rows(r), cols(c) {
        if (r <= 0 || c <= 0) throw std::invalid_argument("Image: dimensions must be positive");
        v.assign(static_cast<size_t>(r) * c, init);
    }

    T& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return v.size(); }
    bool same_shape(const Image& o) const { return rows == o.rows && cols == o.cols; }
};

using ImageF = Image<float>;
using ImageD = Image<double>;
using ImageU8 = Image<uint8_t>;

// One CT slice. Pixels are raw source values (Hounsfield units for NIfTI,
// digital numbers for PNG) until normalize_slice maps them into [0,1].
struct CTSlice {
    ImageF pixels;
    std::pair<double, double> spacing{1.0, 1.0}; // (row, col) mm
    std::string source_id;
    bool hounsfield = false; // true when pixel values are HU
};

// Binary infection mask paired with a slice; values are exactly 0 or 1.
struct MaskImage {
    ImageU8 pixels;
};

// Signed Euclidean pixel distance to the nearest opposite-class pixel:
// negative inside the mask, positive outside, identically zero for the
// degenerate all-one/all-zero mask.
struct SignedDistanceMap {
    ImageD phi;
};

struct SamplePair {
    CTSlice image;
    MaskImage mask;
    std::optional<SignedDistanceMap> sdm;
    std::string scan_id;
};

void require_binary(const MaskImage& mask, const char* op);

// clip((pixels - low) / (high - low), 0, 1); errors when low >= high.
CTSlice normalize_slice(const CTSlice& slice, double low, double high);

// Per-slice min-max normalization (used for PNG sources where the intensity
// scale is unknown). Constant slices map to all zeros.
CTSlice normalize_minmax(const CTSlice& slice);

ImageF resize_bilinear(const ImageF& img, int rows, int cols);
ImageU8 resize_nearest(const ImageU8& img, int rows, int cols);

template <typename T>
Image<T> hflip(const Image<T>& img) {
    Image<T> out(img.rows, img.cols);
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) out.at(r, c) = img.at(r, img.cols - 1 - c);
    return out;
}

} // namespace cthunet
