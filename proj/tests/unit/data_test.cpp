#include <doctest.h>

#include <filesystem>
#include <set>

#include "cthunet/dataset.hpp"
#include "cthunet/distance.hpp"
#include "cthunet/nifti.hpp"
#include "cthunet/oracles.hpp"
#include "cthunet/png_io.hpp"
#include "cthunet/rng.hpp"
#include "cthunet/synth.hpp"

using namespace cthunet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("cthunet_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("normalize_slice maps the window to [0,1]") {
    CTSlice s;
    s.pixels = ImageF(1, 3);
    s.pixels.v = {-1000.0f, 400.0f, -300.0f};
    const CTSlice out = normalize_slice(s, -1000.0, 400.0);
    CHECK(out.pixels.v[0] == doctest::Approx(0.0));
    CHECK(out.pixels.v[1] == doctest::Approx(1.0));
    CHECK(out.pixels.v[2] == doctest::Approx(0.5)); // (-300+1000)/1400
    CHECK_THROWS_AS(normalize_slice(s, 400.0, -1000.0), std::invalid_argument);
    CHECK_THROWS_AS(normalize_slice(s, 5.0, 5.0), std::invalid_argument);
}

TEST_CASE("normalize_slice is monotone and idempotent on normalized input") {
    Rng rng(21);
    CTSlice s;
    s.pixels = ImageF(8, 8);
    for (auto& p : s.pixels.v) p = float(rng.uniform(-1200.0, 600.0));
    const CTSlice once = normalize_slice(s, -1000.0, 400.0);
    for (size_t i = 0; i < s.pixels.size(); ++i)
        for (size_t j = 0; j < s.pixels.size(); ++j)
            if (s.pixels.v[i] <= s.pixels.v[j]) CHECK(once.pixels.v[i] <= once.pixels.v[j]);
    const CTSlice twice = normalize_slice(once, 0.0, 1.0);
    for (size_t i = 0; i < once.pixels.size(); ++i)
        CHECK(twice.pixels.v[i] == doctest::Approx(once.pixels.v[i]).epsilon(1e-6));
}

TEST_CASE("signed_distance_map hand cases") {
    MaskImage m;
    m.pixels = ImageU8(1, 3);
    m.pixels.v = {0, 1, 0};
    auto phi = signed_distance_map(m).phi;
    CHECK(phi.v == std::vector<double>{1.0, -1.0, 1.0});

    m.pixels = ImageU8(1, 5);
    m.pixels.v = {0, 0, 1, 1, 0};
    phi = signed_distance_map(m).phi;
    CHECK(phi.v == std::vector<double>{2.0, 1.0, -1.0, -1.0, 1.0});

    m.pixels = ImageU8(4, 4, 0); // degenerate all-background
    phi = signed_distance_map(m).phi;
    for (double v : phi.v) CHECK(v == 0.0);
    m.pixels = ImageU8(4, 4, 1); // degenerate all-foreground
    phi = signed_distance_map(m).phi;
    for (double v : phi.v) CHECK(v == 0.0);

    m.pixels = ImageU8(2, 2);
    m.pixels.v = {0, 2, 0, 1};
    CHECK_THROWS_AS(signed_distance_map(m), std::invalid_argument);
}

TEST_CASE("signed_distance_map matches the double-loop oracle on random masks") {
    Rng rng(77);
    for (int inst = 0; inst < 100; ++inst) {
        const int rows = 1 + rng.below(16), cols = 1 + rng.below(16);
        MaskImage m;
        m.pixels = ImageU8(rows, cols);
        const double density = rng.uniform(0.0, 1.0);
        for (auto& p : m.pixels.v) p = rng.uniform() < density ? 1 : 0;

        const auto phi = signed_distance_map(m).phi;
        const auto want = brute_force_sdm(m.pixels);
        size_t fg = 0;
        for (auto p : m.pixels.v) fg += p;
        const bool degenerate = fg == 0 || fg == m.pixels.size();
        for (size_t i = 0; i < phi.size(); ++i) {
            CHECK(phi.v[i] == want.v[i]); // exact, both sides sqrt the same integer
            if (!degenerate) {
                CHECK(std::abs(phi.v[i]) >= 1.0);
                if (m.pixels.v[i])
                    CHECK(phi.v[i] < 0.0);
                else
                    CHECK(phi.v[i] > 0.0);
            }
        }
    }
}

TEST_CASE("synth_blobs contract") {
    CHECK_THROWS_AS(synth_blobs(0, 64, 1), std::invalid_argument);
    CHECK_THROWS_AS(synth_blobs(1, 15, 1), std::invalid_argument);

    const auto a = synth_blobs(16, 32, 7);
    const auto b = synth_blobs(16, 32, 7);
    REQUIRE(a.size() == 16);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].image.pixels.v == b[i].image.pixels.v); // bit-identical per seed
        CHECK(a[i].mask.pixels.v == b[i].mask.pixels.v);
        size_t fg = 0;
        for (auto p : a[i].mask.pixels.v) fg += p;
        const double frac = double(fg) / double(a[i].mask.pixels.size());
        CHECK(frac >= 0.02);
        CHECK(frac <= 0.40);
        for (float v : a[i].image.pixels.v) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
    // a sample's content depends only on (seed, index), not on count
    const auto c = synth_blobs(3, 32, 7);
    CHECK(c[2].image.pixels.v == a[2].image.pixels.v);

    const auto tiny = synth_blobs(1, 16, 5);
    size_t fg = 0;
    for (auto p : tiny[0].mask.pixels.v) fg += p;
    const double frac = double(fg) / double(tiny[0].mask.pixels.size());
    CHECK(frac >= 0.02);
    CHECK(frac <= 0.40);
}

TEST_CASE("png dataset round trip and loader errors") {
    const fs::path root = temp_dir("png_ds");
    const auto samples = synth_blobs(10, 32, 3);
    write_png_dataset(samples, root.string());

    auto loaded = load_dataset(root.string());
    REQUIRE(loaded.size() == 10);
    CHECK(loaded[0].image.pixels.rows == 32);
    for (const auto& sp : loaded)
        for (auto p : sp.mask.pixels.v) CHECK((p == 0 || p == 1));

    SUBCASE("orphan image is a hard error naming the file") {
        fs::remove(root / "masks" / "sample_00003.png");
        try {
            load_dataset(root.string());
            FAIL("expected missing-mask error");
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find("sample_00003") != std::string::npos);
        }
    }
    SUBCASE("shape mismatch is a hard error") {
        write_png_mask((root / "masks" / "sample_00003.png").string(), ImageU8(16, 16, 0));
        CHECK_THROWS(load_dataset(root.string()));
    }
    SUBCASE("empty directory is a hard error") {
        const fs::path empty = temp_dir("png_empty");
        fs::create_directories(empty / "images");
        CHECK_THROWS(load_dataset(empty.string()));
        CHECK_THROWS(load_dataset((empty / "nope").string()));
    }
}

TEST_CASE("nifti volumes load slice by slice") {
    const fs::path root = temp_dir("nifti_ds");
    fs::create_directories(root / "images");
    fs::create_directories(root / "masks");

    NiftiVolume vol;
    vol.nx = 12;
    vol.ny = 8;
    vol.nz = 10;
    vol.dx = 0.7;
    vol.dy = 0.8;
    vol.data.resize(size_t(vol.nx) * vol.ny * vol.nz);
    NiftiVolume mask = vol;
    for (int z = 0; z < vol.nz; ++z)
        for (int y = 0; y < vol.ny; ++y)
            for (int x = 0; x < vol.nx; ++x) {
                vol.data[size_t(z) * 96 + size_t(y) * 12 + x] = float(-1000 + 10 * z + x);
                mask.data[size_t(z) * 96 + size_t(y) * 12 + x] = (x == z) ? 1.0f : 0.0f;
            }
    write_nifti((root / "images" / "scanA.nii.gz").string(), vol);
    write_nifti((root / "masks" / "scanA.nii.gz").string(), mask);
    write_nifti((root / "images" / "scanB.nii").string(), vol);
    write_nifti((root / "masks" / "scanB.nii").string(), mask);

    const auto loaded = load_dataset(root.string());
    REQUIRE(loaded.size() == 20); // 10 slices per volume, order preserved
    CHECK(loaded[0].scan_id == "scanA");
    CHECK(loaded[0].image.source_id == "scanA#0");
    CHECK(loaded[9].image.source_id == "scanA#9");
    CHECK(loaded[10].scan_id == "scanB");
    CHECK(loaded[0].image.hounsfield);
    CHECK(loaded[3].image.pixels.at(2, 5) == doctest::Approx(-1000 + 30 + 5));
    CHECK(loaded[3].mask.pixels.at(2, 3) == 1);
    CHECK(loaded[3].mask.pixels.at(2, 4) == 0);
    CHECK(loaded[0].image.spacing.first == doctest::Approx(0.8));
    CHECK(loaded[0].image.spacing.second == doctest::Approx(0.7));
}

TEST_CASE("make_split is by scan, deterministic, ceil-sized") {
    std::vector<SamplePair> samples;
    for (int scan = 0; scan < 20; ++scan)
        for (int slice = 0; slice < 3; ++slice) {
            SamplePair sp;
            sp.image.pixels = ImageF(4, 4);
            sp.mask.pixels = ImageU8(4, 4, 0);
            sp.scan_id = "scan" + std::to_string(scan);
            sp.image.source_id = sp.scan_id + "#" + std::to_string(slice);
            samples.push_back(sp);
        }

    const auto split = make_split(samples, 0.2, 99);
    CHECK(split.test.size() == 4 * 3); // 20 scans, fraction 0.2 -> 4 test scans
    CHECK(split.train.size() == 16 * 3);

    const auto again = make_split(samples, 0.2, 99);
    REQUIRE(again.test.size() == split.test.size());
    for (size_t i = 0; i < split.test.size(); ++i)
        CHECK(again.test[i].image.source_id == split.test[i].image.source_id);

    // no scan ever straddles the split
    std::set<std::string> test_scans, train_scans;
    for (const auto& sp : split.test) test_scans.insert(sp.scan_id);
    for (const auto& sp : split.train) train_scans.insert(sp.scan_id);
    for (const auto& s : test_scans) CHECK(train_scans.count(s) == 0);

    // 5 scans at 0.2 -> always 1 test / 4 train, any seed
    std::vector<SamplePair> five(samples.begin(), samples.begin() + 15);
    for (uint64_t seed : {1ull, 2ull}) {
        const auto s5 = make_split(five, 0.2, seed);
        CHECK(s5.test.size() == 3);
        CHECK(s5.train.size() == 12);
    }

    std::vector<SamplePair> one(samples.begin(), samples.begin() + 3);
    CHECK_THROWS_AS(make_split(one, 0.2, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_split(samples, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_split(samples, 1.0, 1), std::invalid_argument);
}

TEST_CASE("preprocess normalizes and resizes pairs consistently") {
    const fs::path root = temp_dir("pre");
    write_png_dataset(synth_blobs(2, 48, 9), root.string());
    auto samples = load_dataset(root.string());

    PreprocessOptions opts;
    opts.resize_to = 32;
    opts.compute_sdm = true;
    const auto prepped = preprocess(samples, opts);
    for (const auto& sp : prepped) {
        CHECK(sp.image.pixels.rows == 32);
        CHECK(sp.image.pixels.cols == 32);
        CHECK(sp.mask.pixels.rows == 32);
        REQUIRE(sp.sdm.has_value());
        CHECK(sp.sdm->phi.rows == 32);
        for (float v : sp.image.pixels.v) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
        for (auto p : sp.mask.pixels.v) CHECK((p == 0 || p == 1));
    }
}
