#include "cthunet/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cthunet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared-distance transform (lower envelope of parabolas). Sources with
// f == inf never enter the envelope; an all-inf input stays all-inf.
void dt1d(const double* f, int n, double* d, int* v, double* z) {
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s;
        for (;;) {
            const int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
            if (s <= z[k] && k > 0) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (k < 0) {
        std::fill(d, d + n, kInf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const int p = v[j];
        d[q] = double(q - p) * (q - p) + f[p];
    }
}

} // namespace

ImageD squared_distance_to(const ImageU8& mask, uint8_t target) {
    const int rows = mask.rows, cols = mask.cols;
    ImageD dist(rows, cols);

    // column pass
    std::vector<double> f(std::max(rows, cols)), d(std::max(rows, cols));
    std::vector<int> v(std::max(rows, cols));
    std::vector<double> z(std::max(rows, cols) + 1);
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) f[r] = (mask.at(r, c) == target) ? 0.0 : kInf;
        dt1d(f.data(), rows, d.data(), v.data(), z.data());
        for (int r = 0; r < rows; ++r) dist.at(r, c) = d[r];
    }
    // row pass
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) f[c] = dist.at(r, c);
        dt1d(f.data(), cols, d.data(), v.data(), z.data());
        for (int c = 0; c < cols; ++c) dist.at(r, c) = d[c];
    }
    return dist;
}

SignedDistanceMap signed_distance_map(const MaskImage& mask) {
    require_binary(mask, "signed_distance_map");
    const int rows = mask.pixels.rows, cols = mask.pixels.cols;

    size_t fg = 0;
    for (uint8_t p : mask.pixels.v) fg += p;
    SignedDistanceMap out;
    out.phi = ImageD(rows, cols, 0.0);
    if (fg == 0 || fg == mask.pixels.size()) return out; // degenerate: phi == 0

    const ImageD to_fg = squared_distance_to(mask.pixels, 1);
    const ImageD to_bg = squared_distance_to(mask.pixels, 0);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (mask.pixels.at(r, c))
                out.phi.at(r, c) = -std::sqrt(to_bg.at(r, c));
            else
                out.phi.at(r, c) = std::sqrt(to_fg.at(r, c));
        }
    }
    return out;
}

} // namespace cthunet
