#include "cthunet/nifti.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <zlib.h>

namespace cthunet {

namespace {

#pragma pack(push, 1)
struct Nifti1Header {
    int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    int32_t extents;
    int16_t session_error;
    char regular;
    char dim_info;
    int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    int16_t intent_code;
    int16_t datatype;
    int16_t bitpix;
    int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    int16_t qform_code, sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

template <typename T>
void bswap(T& v) {
    auto* p = reinterpret_cast<unsigned char*>(&v);
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(p[i], p[sizeof(T) - 1 - i]);
}

void swap_header(Nifti1Header& h) {
    bswap(h.sizeof_hdr);
    for (auto& d : h.dim) bswap(d);
    bswap(h.datatype);
    bswap(h.bitpix);
    for (auto& p : h.pixdim) bswap(p);
    bswap(h.vox_offset);
    bswap(h.scl_slope);
    bswap(h.scl_inter);
}

template <typename T>
std::vector<float> convert(const std::vector<char>& raw, size_t n, bool swapped) {
    std::vector<float> out(n);
    const T* src = reinterpret_cast<const T*>(raw.data());
    for (size_t i = 0; i < n; ++i) {
        T v = src[i];
        if (swapped) bswap(v);
        out[i] = static_cast<float>(v);
    }
    return out;
}

} // namespace

NiftiVolume read_nifti(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open NIfTI file: " + path);

    Nifti1Header h{};
    if (gzread(f, &h, sizeof(h)) != int(sizeof(h))) {
        gzclose(f);
        throw std::runtime_error("truncated NIfTI header: " + path);
    }
    bool swapped = false;
    if (h.sizeof_hdr != 348) {
        swap_header(h);
        swapped = true;
        if (h.sizeof_hdr != 348) {
            gzclose(f);
            throw std::runtime_error("not a NIfTI-1 file: " + path);
        }
    }
    const int rank = h.dim[0];
    if (rank < 2 || rank > 4 || (rank == 4 && h.dim[4] != 1)) {
        gzclose(f);
        throw std::runtime_error("unsupported NIfTI dimensionality in " + path);
    }

    NiftiVolume vol;
    vol.nx = h.dim[1];
    vol.ny = h.dim[2];
    vol.nz = rank >= 3 ? h.dim[3] : 1;
    vol.dx = h.pixdim[1] > 0 ? h.pixdim[1] : 1.0;
    vol.dy = h.pixdim[2] > 0 ? h.pixdim[2] : 1.0;
    if (vol.nx <= 0 || vol.ny <= 0 || vol.nz <= 0) {
        gzclose(f);
        throw std::runtime_error("invalid NIfTI dimensions in " + path);
    }

    const size_t n = size_t(vol.nx) * vol.ny * vol.nz;
    const size_t bytes = n * size_t(h.bitpix / 8);
    const long offset = long(h.vox_offset > 348 ? h.vox_offset : 352);
    if (gzseek(f, offset, SEEK_SET) < 0) {
        gzclose(f);
        throw std::runtime_error("bad voxel offset in " + path);
    }
    std::vector<char> raw(bytes);
    size_t got = 0;
    while (got < bytes) {
        const int chunk = gzread(f, raw.data() + got, unsigned(std::min<size_t>(bytes - got, 1u << 26)));
        if (chunk <= 0) break;
        got += size_t(chunk);
    }
    gzclose(f);
    if (got != bytes) throw std::runtime_error("truncated NIfTI voxel data: " + path);

    switch (h.datatype) {
        case 2: vol.data = convert<uint8_t>(raw, n, false); break;
        case 256: vol.data = convert<int8_t>(raw, n, false); break;
        case 4: vol.data = convert<int16_t>(raw, n, swapped); break;
        case 512: vol.data = convert<uint16_t>(raw, n, swapped); break;
        case 8: vol.data = convert<int32_t>(raw, n, swapped); break;
        case 768: vol.data = convert<uint32_t>(raw, n, swapped); break;
        case 16: vol.data = convert<float>(raw, n, swapped); break;
        case 64: vol.data = convert<double>(raw, n, swapped); break;
        default:
            throw std::runtime_error("unsupported NIfTI datatype " + std::to_string(h.datatype) +
                                     " in " + path);
    }
    if (h.scl_slope != 0.0f && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f)) {
        for (auto& v : vol.data) v = v * h.scl_slope + h.scl_inter;
    }
    return vol;
}

void write_nifti(const std::string& path, const NiftiVolume& vol) {
    Nifti1Header h{};
    h.sizeof_hdr = 348;
    h.dim[0] = 3;
    h.dim[1] = int16_t(vol.nx);
    h.dim[2] = int16_t(vol.ny);
    h.dim[3] = int16_t(vol.nz);
    h.dim[4] = h.dim[5] = h.dim[6] = h.dim[7] = 1;
    h.datatype = 16; // float32
    h.bitpix = 32;
    h.pixdim[1] = float(vol.dx);
    h.pixdim[2] = float(vol.dy);
    h.pixdim[3] = 1.0f;
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.regular = 'r';
    std::memcpy(h.magic, "n+1", 4);

    const char pad[4] = {0, 0, 0, 0};
    const size_t bytes = vol.data.size() * sizeof(float);
    const bool gz = path.size() > 3 && path.substr(path.size() - 3) == ".gz";
    if (gz) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw std::runtime_error("cannot write NIfTI file: " + path);
        bool ok = gzwrite(f, &h, sizeof(h)) == int(sizeof(h)) && gzwrite(f, pad, 4) == 4 &&
                  gzwrite(f, vol.data.data(), unsigned(bytes)) == int(bytes);
        gzclose(f);
        if (!ok) throw std::runtime_error("failed writing NIfTI file: " + path);
    } else {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write NIfTI file: " + path);
        f.write(reinterpret_cast<const char*>(&h), sizeof(h));
        f.write(pad, 4);
        f.write(reinterpret_cast<const char*>(vol.data.data()), std::streamsize(bytes));
        if (!f) throw std::runtime_error("failed writing NIfTI file: " + path);
    }
}

} // namespace cthunet
