#include "cthunet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "cthunet/distance.hpp"
#include "cthunet/nifti.hpp"
#include "cthunet/png_io.hpp"
#include "cthunet/rng.hpp"

namespace fs = std::filesystem;

namespace cthunet {

namespace {

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

std::string nifti_base(const std::string& filename) {
    if (has_suffix(filename, ".nii.gz")) return filename.substr(0, filename.size() - 7);
    if (has_suffix(filename, ".nii")) return filename.substr(0, filename.size() - 4);
    return filename;
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::vector<std::string>& suffixes) {
    std::vector<fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string name = e.path().filename().string();
        for (const auto& suf : suffixes)
            if (has_suffix(name, suf)) {
                out.push_back(e.path());
                break;
            }
    }
    std::sort(out.begin(), out.end());
    return out;
}

uint8_t binarize_value(float v, int label) {
    if (label > 0) return static_cast<uint8_t>(std::lround(v) == label ? 1 : 0);
    return v > 0.0f ? 1 : 0;
}

std::vector<SamplePair> load_png_pairs(const fs::path& root, const LoadOptions& opts) {
    const auto images = sorted_files(root / "images", {".png"});
    if (images.empty())
        throw std::runtime_error("empty dataset directory: no PNG images under " +
                                 (root / "images").string());
    std::vector<SamplePair> out;
    out.reserve(images.size());
    for (const auto& img_path : images) {
        const fs::path mask_path = root / "masks" / img_path.filename();
        if (!fs::exists(mask_path))
            throw std::runtime_error("missing mask for image: " + img_path.string() +
                                     " (expected " + mask_path.string() + ")");
        SamplePair sp;
        sp.image.pixels = read_png_gray(img_path.string());
        sp.image.source_id = img_path.stem().string();
        sp.image.hounsfield = false;
        const ImageF raw_mask = read_png_gray(mask_path.string());
        if (!raw_mask.same_shape(sp.image.pixels))
            throw std::runtime_error("shape mismatch between image and mask: " + img_path.string());
        sp.mask.pixels = ImageU8(raw_mask.rows, raw_mask.cols);
        for (size_t i = 0; i < raw_mask.size(); ++i)
            sp.mask.pixels.v[i] = binarize_value(raw_mask.v[i], opts.infection_label);
        sp.scan_id = sp.image.source_id;
        out.push_back(std::move(sp));
    }
    return out;
}

std::vector<SamplePair> load_nifti_pairs(const fs::path& root, const LoadOptions& opts) {
    const auto volumes = sorted_files(root / "images", {".nii", ".nii.gz"});
    if (volumes.empty())
        throw std::runtime_error("empty dataset directory: no NIfTI volumes under " +
                                 (root / "images").string());
    std::vector<SamplePair> out;
    for (const auto& vol_path : volumes) {
        const std::string base = nifti_base(vol_path.filename().string());
        fs::path mask_path = root / "masks" / (base + ".nii.gz");
        if (!fs::exists(mask_path)) mask_path = root / "masks" / (base + ".nii");
        if (!fs::exists(mask_path))
            throw std::runtime_error("missing mask for volume: " + vol_path.string());

        const NiftiVolume vol = read_nifti(vol_path.string());
        const NiftiVolume mvol = read_nifti(mask_path.string());
        if (vol.nx != mvol.nx || vol.ny != mvol.ny || vol.nz != mvol.nz)
            throw std::runtime_error("shape mismatch between volume and mask: " + vol_path.string());

        for (int z = 0; z < vol.nz; ++z) {
            SamplePair sp;
            sp.image.pixels = ImageF(vol.ny, vol.nx);
            sp.mask.pixels = ImageU8(vol.ny, vol.nx);
            for (int y = 0; y < vol.ny; ++y)
                for (int x = 0; x < vol.nx; ++x) {
                    sp.image.pixels.at(y, x) = vol.at(x, y, z);
                    sp.mask.pixels.at(y, x) = binarize_value(mvol.at(x, y, z), opts.infection_label);
                }
            sp.image.spacing = {vol.dy, vol.dx};
            sp.image.source_id = base + "#" + std::to_string(z);
            sp.image.hounsfield = true;
            sp.scan_id = base;
            out.push_back(std::move(sp));
        }
    }
    return out;
}

} // namespace

std::vector<SamplePair> load_dataset(const std::string& root, const LoadOptions& opts) {
    const fs::path r(root);
    if (!fs::exists(r)) throw std::runtime_error("dataset root does not exist: " + root);

    Layout layout = opts.layout;
    if (layout == Layout::Auto) {
        layout = sorted_files(r / "images", {".nii", ".nii.gz"}).empty() ? Layout::PngPairs
                                                                         : Layout::Nifti;
    }
    return layout == Layout::PngPairs ? load_png_pairs(r, opts) : load_nifti_pairs(r, opts);
}

DatasetSplit make_split(const std::vector<SamplePair>& samples, double test_fraction,
                        uint64_t seed) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw std::invalid_argument("make_split: test_fraction must be in (0,1)");
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t i = 0; i < samples.size(); ++i) groups[samples[i].scan_id].push_back(i);
    if (groups.size() < 2)
        throw std::invalid_argument("make_split: need at least 2 scan groups, got " +
                                    std::to_string(groups.size()));

    std::vector<std::string> keys;
    keys.reserve(groups.size());
    for (const auto& [k, _] : groups) keys.push_back(k);
    Rng rng(seed);
    rng.shuffle(keys);

    const size_t n_test =
        static_cast<size_t>(std::ceil(double(groups.size()) * test_fraction));
    DatasetSplit split;
    split.seed = seed;
    for (size_t g = 0; g < keys.size(); ++g) {
        auto& dst = (g < n_test) ? split.test : split.train;
        for (size_t idx : groups[keys[g]]) dst.push_back(samples[idx]);
    }
    return split;
}

std::vector<SamplePair> preprocess(std::vector<SamplePair> samples, const PreprocessOptions& opts) {
    for (auto& sp : samples) {
        sp.image = sp.image.hounsfield ? normalize_slice(sp.image, opts.hu_low, opts.hu_high)
                                       : normalize_minmax(sp.image);
        if (opts.resize_to > 0 &&
            (sp.image.pixels.rows != opts.resize_to || sp.image.pixels.cols != opts.resize_to)) {
            const double sr = double(sp.image.pixels.rows) / opts.resize_to;
            const double sc = double(sp.image.pixels.cols) / opts.resize_to;
            sp.image.pixels = resize_bilinear(sp.image.pixels, opts.resize_to, opts.resize_to);
            sp.mask.pixels = resize_nearest(sp.mask.pixels, opts.resize_to, opts.resize_to);
            sp.image.spacing = {sp.image.spacing.first * sr, sp.image.spacing.second * sc};
            sp.sdm.reset(); // any precomputed map no longer matches the mask
        }
        if (opts.compute_sdm && !sp.sdm) sp.sdm = signed_distance_map(sp.mask);
    }
    return samples;
}

void write_png_dataset(const std::vector<SamplePair>& samples, const std::string& root) {
    const fs::path r(root);
    std::error_code ec;
    fs::create_directories(r / "images", ec);
    fs::create_directories(r / "masks", ec);
    if (!fs::exists(r / "images") || !fs::exists(r / "masks"))
        throw std::runtime_error("cannot create dataset directories under " + root);
    char name[32];
    for (size_t i = 0; i < samples.size(); ++i) {
        std::snprintf(name, sizeof(name), "sample_%05zu.png", i);
        write_png_gray8((r / "images" / name).string(), samples[i].image.pixels);
        write_png_mask((r / "masks" / name).string(), samples[i].mask.pixels);
    }
}

} // namespace cthunet
