#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cthunet/image.hpp"

namespace cthunet {

enum class Layout { Auto, PngPairs, Nifti };

struct LoadOptions {
    Layout layout = Layout::Auto;
    // 0 keeps any nonzero mask label as infection; a positive value keeps
    // only that label (multi-label source masks).
    int infection_label = 0;
};

// Expected layouts:
//   PNG:   root/images/*.png with root/masks/<same base>.png
//   NIfTI: root/images/*.nii[.gz] with root/masks/<same base>.nii[.gz],
//          slices taken along the last axis.
// Images are returned raw; normalization and resizing are separate steps.
std::vector<SamplePair> load_dataset(const std::string& root, const LoadOptions& opts = {});

struct DatasetSplit {
    std::vector<SamplePair> train;
    std::vector<SamplePair> test;
    uint64_t seed = 0;
};

// Splits by scan (SamplePair::scan_id), never by slice: ceil(groups *
// test_fraction) whole scans go to test. Deterministic given seed.
DatasetSplit make_split(const std::vector<SamplePair>& samples, double test_fraction,
                        uint64_t seed);

struct PreprocessOptions {
    int resize_to = 256;       // 0 keeps the native size
    double hu_low = -1000.0;   // lung window for HU sources
    double hu_high = 400.0;
    bool compute_sdm = false;
};

// Normalizes (HU window for Hounsfield sources, per-slice min-max otherwise)
// and resizes: bilinear for images, nearest for masks.
std::vector<SamplePair> preprocess(std::vector<SamplePair> samples, const PreprocessOptions& opts);

// Writes samples in the PNG pair layout consumed by load_dataset.
void write_png_dataset(const std::vector<SamplePair>& samples, const std::string& root);

} // namespace cthunet
