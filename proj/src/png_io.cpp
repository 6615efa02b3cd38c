#include "cthunet/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace cthunet {

ImageF read_png_gray(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw std::runtime_error("cannot read image: " + path);
    if (m.channels() > 1) cv::cvtColor(m, m, cv::COLOR_BGR2GRAY);
    cv::Mat f;
    m.convertTo(f, CV_32F);
    ImageF out(f.rows, f.cols);
    for (int r = 0; r < f.rows; ++r)
        for (int c = 0; c < f.cols; ++c) out.at(r, c) = f.at<float>(r, c);
    return out;
}

void write_png_gray8(const std::string& path, const ImageF& img) {
    cv::Mat m(img.rows, img.cols, CV_8U);
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) {
            const float v = std::clamp(img.at(r, c), 0.0f, 1.0f);
            m.at<uint8_t>(r, c) = static_cast<uint8_t>(std::lround(v * 255.0f));
        }
    if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write image: " + path);
}

void write_png_mask(const std::string& path, const ImageU8& mask) {
    cv::Mat m(mask.rows, mask.cols, CV_8U);
    for (int r = 0; r < mask.rows; ++r)
        for (int c = 0; c < mask.cols; ++c) m.at<uint8_t>(r, c) = mask.at(r, c) ? 255 : 0;
    if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write image: " + path);
}

} // namespace cthunet
