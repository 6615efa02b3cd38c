#pragma once

#include "cthunet/image.hpp"

namespace cthunet {

// Exact squared Euclidean distance from every pixel to the nearest pixel
// where mask == target. Pixels are unit-spaced; result is +inf when no pixel
// matches target.
ImageD squared_distance_to(const ImageU8& mask, uint8_t target);

// phi < 0 inside the mask, > 0 outside, |phi| = Euclidean distance to the
// nearest opposite-class pixel. All-foreground or all-background masks give
// phi == 0 so a boundary term built on phi contributes nothing.
SignedDistanceMap signed_distance_map(const MaskImage& mask);

} // namespace cthunet
