#pragma once

#include <cstdint>
#include <vector>

#include "cthunet/image.hpp"

namespace cthunet {

// Deterministic desk-scale dataset: size x size slices with 1-3 soft-edged
// elliptical blobs over a textured noisy background. Every mask has a
// foreground fraction in [0.02, 0.40]. Pixel values are already in [0,1];
// no further normalization is needed.
std::vector<SamplePair> synth_blobs(int count, int size, uint64_t seed);

} // namespace cthunet
