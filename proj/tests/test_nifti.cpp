#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "airquant/error.hpp"
#include "airquant/grid.hpp"
#include "airquant/nifti.hpp"

using namespace airquant;

namespace {

std::string fixture(const std::string& name) {
    return std::string(TEST_DATA_DIR) + "/" + name;
}

// Fixtures under tests/data were produced by an unrelated NIfTI writer
// (see tests/data/README.md), so these checks are independent of our own
// serialization code.

}  // namespace

TEST_CASE("int16 gz ramp: dims, spacing, x-fastest voxel order") {
    Volume v = read_volume(fixture("ramp_4x4x4_int16.nii.gz"));
    CHECK(v.geom.dims == std::array<int, 3>{4, 4, 4});
    for (int a = 0; a < 3; ++a) CHECK(v.geom.spacing[a] == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(v.values.size() == 64);
    // value was written as the flat index with x fastest
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) CHECK(v.at(i, j, k) == double(i + 4 * j + 16 * k));
}

TEST_CASE("uint16 and int32 ramps decode through the same path") {
    Volume u = read_volume(fixture("ramp_4x4x4_uint16.nii"));
    CHECK(u.geom.spacing == std::array<double, 3>{2.0, 2.0, 2.0});
    CHECK(u.at(0, 0, 0) == 0.0);
    CHECK(u.at(3, 3, 3) == 63.0);

    Volume s = read_volume(fixture("ramp_4x4x4_int32.nii.gz"));
    CHECK(s.at(0, 0, 0) == -1000.0);
    CHECK(s.at(3, 3, 3) == -937.0);
}

TEST_CASE("float64 gradient is read bit-exact") {
    Volume v = read_volume(fixture("grad_float64.nii.gz"));
    REQUIRE(v.geom.dims == std::array<int, 3>{3, 4, 5});
    // the affine is stored in float32, so spacing carries float precision
    CHECK(v.geom.spacing[0] == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(v.geom.spacing[2] == doctest::Approx(1.5).epsilon(1e-6));
    for (int k = 0; k < 5; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 3; ++i)
                CHECK(v.at(i, j, k) == -1000.0 + 7.25 * i + 0.5 * j - 3.125 * k);
}

TEST_CASE("scl_slope and scl_inter are applied on load") {
    Volume v = read_volume(fixture("scaled_float32.nii.gz"));
    REQUIRE(v.geom.dims == std::array<int, 3>{3, 3, 3});
    // stored raw 0..26, slope 2, intercept -100
    for (int n = 0; n < 27; ++n) CHECK(v.values[size_t(n)] == 2.0 * n - 100.0);
}

TEST_CASE("read_mask binarizes 0/255 data and keeps geometry") {
    Mask m = read_mask(fixture("mask_0_255_uint8.nii"));
    REQUIRE(m.geom.dims == std::array<int, 3>{5, 4, 3});
    CHECK(m.geom.spacing[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.geom.spacing[2] == doctest::Approx(2.5).epsilon(1e-12));
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 5; ++i) CHECK(int(m.at(i, j, k)) == ((i + j + k) % 2 == 0 ? 1 : 0));

    // the same file read as a volume keeps the raw stored values
    Volume v = read_volume(fixture("mask_0_255_uint8.nii"));
    CHECK(v.at(0, 0, 0) == 255.0);
    CHECK(v.at(1, 0, 0) == 0.0);
}

TEST_CASE("inferior-to-superior files are reindexed so k points superior") {
    // written with srow_z = [0, 0, -2.5, 12.5] and slice value == file k
    Volume v = read_volume(fixture("flipped_z_int16.nii.gz"));
    REQUIRE(v.geom.dims == std::array<int, 3>{4, 4, 6});
    CHECK(v.geom.affine_at(2, 2) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(v.geom.affine_at(2, 3) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(v.geom.spacing[2] == doctest::Approx(2.5).epsilon(1e-12));
    for (int k = 0; k < 6; ++k) {
        CHECK(v.at(0, 0, k) == double(5 - k));
        // world z still matches where that slice sat in the scanner
        CHECK(v.geom.world(0, 0, k)[2] == doctest::Approx(2.5 * k).epsilon(1e-12));
    }
}

TEST_CASE("volume roundtrip preserves dims, spacing, affine, values") {
    Volume v;
    v.geom.dims = {3, 2, 4};
    v.geom.spacing = {0.5, 1.25, 2.0};
    v.geom.set_identity_affine();
    v.geom.affine_at(0, 3) = -7.5;
    v.geom.affine_at(2, 3) = 3.25;
    v.values.resize(24);
    for (size_t n = 0; n < 24; ++n) v.values[n] = 0.125 * double(n) - 3.0;

    for (const char* name : {"rt_vol.nii", "rt_vol.nii.gz"}) {
        const std::string path = name;
        write_volume(v, path);
        Volume r = read_volume(path);
        CHECK(r.geom.dims == v.geom.dims);
        for (int a = 0; a < 3; ++a)
            CHECK(r.geom.spacing[a] == doctest::Approx(v.geom.spacing[a]).epsilon(1e-12));
        for (int i = 0; i < 16; ++i)
            CHECK(r.geom.affine[size_t(i)] == doctest::Approx(v.geom.affine[size_t(i)]).epsilon(1e-12));
        CHECK(r.values == v.values);  // float64 storage, bit-exact
        std::remove(path.c_str());
    }
}

TEST_CASE("mask roundtrip is exact") {
    Mask m;
    m.geom.dims = {4, 5, 3};
    m.geom.spacing = {1.0, 1.0, 1.0};
    m.geom.set_identity_affine();
    m.values.assign(60, 0);
    for (size_t n = 0; n < 60; n += 3) m.values[n] = 1;

    write_mask(m, "rt_mask.nii.gz");
    Mask r = read_mask("rt_mask.nii.gz");
    CHECK(r.geom.dims == m.geom.dims);
    CHECK(r.values == m.values);
    std::remove("rt_mask.nii.gz");
}

TEST_CASE("writing a negative-z volume reads back normalized but world-equivalent") {
    Volume v;
    v.geom.dims = {2, 2, 3};
    v.geom.spacing = {1.0, 1.0, 2.0};
    v.geom.set_identity_affine();
    v.geom.affine_at(2, 2) = -2.0;
    v.geom.affine_at(2, 3) = 9.0;
    v.values.resize(12);
    for (size_t n = 0; n < 12; ++n) v.values[n] = double(n);

    write_volume(v, "rt_negz.nii");
    Volume r = read_volume("rt_negz.nii");
    CHECK(r.geom.affine_at(2, 2) == 2.0);
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i) {
                // same world point carries the same value in both images
                const auto w = v.geom.world(i, j, k);
                int kr = -1;
                for (int kk = 0; kk < 3; ++kk)
                    if (r.geom.world(i, j, kk)[2] == w[2]) kr = kk;
                REQUIRE(kr >= 0);
                CHECK(r.at(i, j, kr) == v.at(i, j, k));
            }
    std::remove("rt_negz.nii");
}

TEST_CASE("missing file raises IoError") {
    CHECK_THROWS_AS(read_volume("no_such_file.nii.gz"), IoError);
}

TEST_CASE("truncated header raises FormatError") {
    {
        std::ofstream f("trunc.nii", std::ios::binary);
        const char junk[100] = {};
        f.write(junk, sizeof(junk));
    }
    CHECK_THROWS_AS(read_volume("trunc.nii"), FormatError);
    std::remove("trunc.nii");
}

TEST_CASE("bad magic raises FormatError") {
    Volume v;
    v.geom.dims = {2, 2, 2};
    v.geom.spacing = {1, 1, 1};
    v.geom.set_identity_affine();
    v.values.assign(8, 0.0);
    write_volume(v, "badmagic.nii");
    std::fstream f("badmagic.nii", std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(344);
    f.write("xxx", 3);
    f.close();
    CHECK_THROWS_AS(read_volume("badmagic.nii"), FormatError);
    std::remove("badmagic.nii");
}

TEST_CASE("unknown datatype code raises UnsupportedDatatypeError") {
    Volume v;
    v.geom.dims = {2, 2, 2};
    v.geom.spacing = {1, 1, 1};
    v.geom.set_identity_affine();
    v.values.assign(8, 0.0);
    write_volume(v, "baddt.nii");
    std::fstream f("baddt.nii", std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(70);
    const std::int16_t dt = 1287;  // RGB96, which we do not handle
    f.write(reinterpret_cast<const char*>(&dt), 2);
    f.close();
    CHECK_THROWS_AS(read_volume("baddt.nii"), UnsupportedDatatypeError);
    std::remove("baddt.nii");
}

TEST_CASE("data shorter than dims promise raises FormatError") {
    Volume v;
    v.geom.dims = {4, 4, 4};
    v.geom.spacing = {1, 1, 1};
    v.geom.set_identity_affine();
    v.values.assign(64, 1.0);
    write_volume(v, "short.nii");
    {
        // chop off the last 100 bytes of voxel data
        std::ifstream in("short.nii", std::ios::binary | std::ios::ate);
        const auto size = in.tellg();
        std::vector<char> bytes(size_t(size) - 100);
        in.seekg(0);
        in.read(bytes.data(), std::streamsize(bytes.size()));
        in.close();
        std::ofstream out("short.nii", std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), std::streamsize(bytes.size()));
    }
    CHECK_THROWS_AS(read_volume("short.nii"), FormatError);
    std::remove("short.nii");
}
