#include "cthunet/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

namespace cthunet {

void require_binary(const MaskImage& mask, const char* op) {
    for (uint8_t p : mask.pixels.v)
        if (p != 0 && p != 1)
            throw std::invalid_argument(std::string(op) + ": mask is not binary (found value " +
                                        std::to_string(int(p)) + ")");
}

CTSlice normalize_slice(const CTSlice& slice, double low, double high) {
    if (low >= high) throw std::invalid_argument("normalize_slice: window low must be < high");
    CTSlice out = slice;
    const double range = high - low;
    for (auto& p : out.pixels.v) {
        double v = (static_cast<double>(p) - low) / range;
        p = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
}

CTSlice normalize_minmax(const CTSlice& slice) {
    const auto [mn, mx] = std::minmax_element(slice.pixels.v.begin(), slice.pixels.v.end());
    if (*mx - *mn < 1e-12f) {
        CTSlice out = slice;
        std::fill(out.pixels.v.begin(), out.pixels.v.end(), 0.0f);
        return out;
    }
    return normalize_slice(slice, *mn, *mx);
}

ImageF resize_bilinear(const ImageF& img, int rows, int cols) {
    if (img.rows == rows && img.cols == cols) return img;
    cv::Mat src(img.rows, img.cols, CV_32F, const_cast<float*>(img.v.data()));
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(cols, rows), 0, 0, cv::INTER_LINEAR);
    ImageF out(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out.at(r, c) = dst.at<float>(r, c);
    return out;
}

ImageU8 resize_nearest(const ImageU8& img, int rows, int cols) {
    if (img.rows == rows && img.cols == cols) return img;
    cv::Mat src(img.rows, img.cols, CV_8U, const_cast<uint8_t*>(img.v.data()));
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(cols, rows), 0, 0, cv::INTER_NEAREST);
    ImageU8 out(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out.at(r, c) = dst.at<uint8_t>(r, c);
    return out;
}

} // namespace cthunet
