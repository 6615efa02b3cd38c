#include "cthunet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cthunet/rng.hpp"

namespace cthunet {

namespace {

struct Blob {
    double cx, cy, ra, rb, cos_t, sin_t, amp;
};

// Normalized elliptical radius: <= 1 inside the blob support.
double blob_radius(const Blob& b, double x, double y) {
    const double dx = x - b.cx, dy = y - b.cy;
    const double u = (b.cos_t * dx + b.sin_t * dy) / b.ra;
    const double w = (-b.sin_t * dx + b.cos_t * dy) / b.rb;
    return std::sqrt(u * u + w * w);
}

std::vector<Blob> draw_blobs(Rng& rng, int size) {
    const int k = 1 + rng.below(3);
    std::vector<Blob> blobs(k);
    for (auto& b : blobs) {
        b.cx = rng.uniform(0.25, 0.75) * size;
        b.cy = rng.uniform(0.25, 0.75) * size;
        b.ra = rng.uniform(0.10, 0.22) * size;
        b.rb = rng.uniform(0.10, 0.22) * size;
        const double t = rng.uniform(0.0, 3.14159265358979323846);
        b.cos_t = std::cos(t);
        b.sin_t = std::sin(t);
        b.amp = rng.uniform(0.45, 0.70);
    }
    return blobs;
}

double foreground_fraction(const std::vector<Blob>& blobs, int size) {
    size_t fg = 0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (const auto& b : blobs)
                if (blob_radius(b, x, y) <= 1.0) {
                    ++fg;
                    break;
                }
    return double(fg) / (double(size) * size);
}

} // namespace

std::vector<SamplePair> synth_blobs(int count, int size, uint64_t seed) {
    if (count < 1) throw std::invalid_argument("synth_blobs: count must be >= 1");
    if (size < 16) throw std::invalid_argument("synth_blobs: size must be >= 16");

    std::vector<SamplePair> samples;
    samples.reserve(count);
    for (int i = 0; i < count; ++i) {
        Rng rng(Rng::mix(seed, static_cast<uint64_t>(i)));

        const double base = rng.uniform(0.10, 0.30);
        struct Wave {
            double fx, fy, px, py, amp;
        } waves[3];
        for (auto& w : waves) {
            const double two_pi_over = 6.28318530717958647692 / size;
            w.fx = rng.uniform(0.5, 2.0) * two_pi_over;
            w.fy = rng.uniform(0.5, 2.0) * two_pi_over;
            w.px = rng.uniform(0.0, 6.28318530717958647692);
            w.py = rng.uniform(0.0, 6.28318530717958647692);
            w.amp = rng.uniform(0.01, 0.04);
        }

        std::vector<Blob> blobs;
        bool accepted = false;
        for (int attempt = 0; attempt < 64 && !accepted; ++attempt) {
            blobs = draw_blobs(rng, size);
            const double frac = foreground_fraction(blobs, size);
            accepted = frac >= 0.02 && frac <= 0.40;
        }
        if (!accepted) {
            // fallback: centered circle, fraction ~0.196
            Blob b{0.5 * size, 0.5 * size, 0.25 * size, 0.25 * size, 1.0, 0.0, 0.55};
            blobs.assign(1, b);
        }

        SamplePair sp;
        sp.image.pixels = ImageF(size, size);
        sp.image.spacing = {1.0, 1.0};
        sp.image.source_id = "synth_" + std::to_string(i);
        sp.image.hounsfield = false;
        sp.mask.pixels = ImageU8(size, size, 0);
        sp.scan_id = sp.image.source_id;

        const double edge = 0.10; // soft-edge width in normalized radius units
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                double v = base;
                for (const auto& w : waves)
                    v += w.amp * std::sin(w.fx * x + w.px) * std::sin(w.fy * y + w.py);
                bool inside = false;
                for (const auto& b : blobs) {
                    const double d = blob_radius(b, x, y);
                    v += b.amp / (1.0 + std::exp((d - 1.0) / edge));
                    inside = inside || d <= 1.0;
                }
                v += rng.normal(0.0, 0.05);
                sp.image.pixels.at(y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
                sp.mask.pixels.at(y, x) = inside ? 1 : 0;
            }
        }
        samples.push_back(std::move(sp));
    }
    return samples;
}

} // namespace cthunet
