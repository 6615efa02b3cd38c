#pragma once

#include <string>
#include <vector>

namespace cthunet {

// In-memory NIfTI-1 volume; data is x-fastest, one float per voxel with
// scl_slope/scl_inter already applied.
struct NiftiVolume {
    int nx = 0, ny = 0, nz = 0;
    double dx = 1.0, dy = 1.0; // in-plane spacing (mm)
    std::vector<float> data;

    float at(int x, int y, int z) const {
        return data[static_cast<size_t>(z) * nx * ny + static_cast<size_t>(y) * nx + x];
    }
};

// Reads .nii or .nii.gz (single-file NIfTI-1). Supports the common scalar
// dtypes; 4-D volumes with a singleton 4th dim are accepted.
NiftiVolume read_nifti(const std::string& path);

// Minimal float32 writer, uncompressed or gzipped depending on extension.
void write_nifti(const std::string& path, const NiftiVolume& vol);

} // namespace cthunet
