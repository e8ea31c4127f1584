#include <doctest.h>

#include <cmath>

#include "cardiomech/errors.hpp"
#include "cardiomech/rng.hpp"
#include "cardiomech/volume.hpp"

using namespace cardiomech;

namespace {

GridSpec make_grid(int nx, int ny, int nz, double spacing = 1.0) {
    GridSpec g;
    g.dims = {nx, ny, nz};
    g.spacing = {spacing, spacing, spacing};
    g.origin = {0.0, 0.0, 0.0};
    return g;
}

Volume3 ramp_volume(const GridSpec& g) {
    Volume3 v(g);
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) v.at(i, j, k) = 3.0 * i + 7.0 * j + 13.0 * k;
    return v;
}

} // namespace

TEST_CASE("trilinear_sample hits voxel centers exactly") {
    const GridSpec g = make_grid(4, 4, 4, 2.0);
    const Volume3 v = ramp_volume(g);
    CHECK(trilinear_sample(v, g.position(2, 1, 3)) == doctest::Approx(v.at(2, 1, 3)).epsilon(1e-12));
}

TEST_CASE("trilinear_sample interpolates the midpoint of two x neighbours") {
    const GridSpec g = make_grid(4, 3, 3);
    Volume3 v(g);
    v.at(1, 1, 1) = 0.0;
    v.at(2, 1, 1) = 1.0;
    CHECK(trilinear_sample(v, {1.5, 1.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("trilinear_sample clamps out-of-bounds points to the boundary") {
    const GridSpec g = make_grid(4, 3, 3);
    const Volume3 v = ramp_volume(g);
    CHECK(trilinear_sample(v, {3.0 + 10.0, 1.0, 1.0}) == doctest::Approx(v.at(3, 1, 1)));
    CHECK(trilinear_sample(v, {-25.0, 1.0, 1.0}) == doctest::Approx(v.at(0, 1, 1)));
}

TEST_CASE("trilinear_sample rejects non-finite points") {
    const Volume3 v = ramp_volume(make_grid(3, 3, 3));
    CHECK_THROWS_AS(trilinear_sample(v, {std::nan(""), 0.0, 0.0}), ValidationError);
}

TEST_CASE("warp_volume with a zero field is bit-exact identity") {
    const GridSpec g = make_grid(6, 5, 4);
    const Volume3 v = ramp_volume(g);
    const Volume3 out = warp_volume(v, DisplacementField3(g));
    CHECK(out.data == v.data);
}

TEST_CASE("warp_volume by +2 voxels in x shifts the interior by index") {
    const GridSpec g = make_grid(8, 6, 5);
    Rng rng(7);
    Volume3 v(g);
    for (double& d : v.data) d = rng.uniform(0.0, 100.0);
    DisplacementField3 f(g);
    for (std::size_t p = 0; p < g.voxel_count(); ++p) f.data[3 * p] = 2.0;
    const Volume3 out = warp_volume(v, f);
    for (int k = 0; k < 5; ++k)
        for (int j = 0; j < 6; ++j)
            for (int i = 0; i < 6; ++i)
                CHECK(out.at(i, j, k) == doctest::Approx(v.at(i + 2, j, k)).epsilon(1e-12));
}

TEST_CASE("warp_volume far out of bounds clamps to the corner value") {
    const GridSpec g = make_grid(4, 4, 4);
    const Volume3 v = ramp_volume(g);
    DisplacementField3 f(g);
    for (double& d : f.data) d = 100.0;  // all three components
    const Volume3 out = warp_volume(v, f);
    for (double d : out.data) CHECK(d == doctest::Approx(v.at(3, 3, 3)));
}

TEST_CASE("warp_volume rejects mismatched grids") {
    const Volume3 v = ramp_volume(make_grid(4, 4, 4));
    CHECK_THROWS_AS(warp_volume(v, DisplacementField3(make_grid(4, 4, 5))), ValidationError);
}

TEST_CASE("warp_labels zero field is identity and half-voxel ties round down") {
    const GridSpec g = make_grid(6, 5, 4);
    LabelMap3 labels(g);
    for (std::size_t p = 0; p < labels.data.size(); ++p) labels.data[p] = static_cast<std::uint8_t>(p % 7);
    CHECK(warp_labels(labels, DisplacementField3(g)).data == labels.data);

    DisplacementField3 half(g);
    for (std::size_t p = 0; p < g.voxel_count(); ++p) half.data[3 * p] = 0.5;
    // exactly halfway between i and i+1: the tie goes to the lower index
    CHECK(warp_labels(labels, half).data == labels.data);

    DisplacementField3 past(g);
    for (std::size_t p = 0; p < g.voxel_count(); ++p) past.data[3 * p] = 0.51;
    const LabelMap3 shifted = warp_labels(labels, past);
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 5; ++j)
            for (int i = 0; i < 5; ++i) CHECK(shifted.at(i, j, k) == labels.at(i + 1, j, k));
}

TEST_CASE("warp_labels integer shift matches the index oracle") {
    const GridSpec g = make_grid(7, 6, 5);
    Rng rng(11);
    LabelMap3 labels(g);
    for (auto& l : labels.data) l = static_cast<std::uint8_t>(rng.below(4));
    DisplacementField3 f(g);
    for (std::size_t p = 0; p < g.voxel_count(); ++p) f.data[3 * p + 1] = 2.0;
    const LabelMap3 out = warp_labels(labels, f);
    for (int k = 0; k < 5; ++k)
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 7; ++i) CHECK(out.at(i, j, k) == labels.at(i, j + 2, k));
}

TEST_CASE("warp_labels never introduces labels absent from the input") {
    const GridSpec g = make_grid(6, 6, 6);
    Rng rng(13);
    LabelMap3 labels(g);
    for (auto& l : labels.data) l = static_cast<std::uint8_t>(rng.below(3) == 0 ? 5 : 0);
    DisplacementField3 f(g);
    for (double& d : f.data) d = rng.uniform(-3.0, 3.0);
    const LabelMap3 out = warp_labels(labels, f);
    for (std::uint8_t l : out.data) CHECK((l == 0 || l == 5));
}

TEST_CASE("downsample: identity, constants, and the hand-averaged block") {
    const GridSpec g = make_grid(5, 5, 5);
    const Volume3 v = ramp_volume(g);
    CHECK(downsample(v, 1).data == v.data);
    CHECK_THROWS_AS(downsample(v, 0), ValidationError);

    Volume3 constant(g, 4.25);
    const Volume3 down = downsample(constant, 2);
    CHECK(down.grid.dims == std::array<int, 3>{3, 3, 3});
    CHECK(down.grid.spacing[0] == doctest::Approx(2.0));
    for (double d : down.data) CHECK(d == doctest::Approx(4.25).epsilon(1e-15));

    Volume3 block(make_grid(2, 2, 2));
    block.at(0, 0, 0) = 0;
    block.at(1, 0, 0) = 0;
    block.at(0, 1, 0) = 0;
    block.at(1, 1, 0) = 0;
    block.at(0, 0, 1) = 1;
    block.at(1, 0, 1) = 1;
    block.at(0, 1, 1) = 1;
    block.at(1, 1, 1) = 1;
    const Volume3 single = downsample(block, 2);
    CHECK(single.grid.voxel_count() == 1);
    CHECK(single.data[0] == doctest::Approx(0.5));
}

TEST_CASE("upsample_field reproduces constants and zero fields") {
    const GridSpec fine = make_grid(8, 8, 8);
    const GridSpec coarse = downsample_grid(fine, 2);
    DisplacementField3 f(coarse);
    for (std::size_t p = 0; p < coarse.voxel_count(); ++p) {
        f.data[3 * p] = 1.5;
        f.data[3 * p + 1] = -2.5;
        f.data[3 * p + 2] = 0.25;
    }
    const DisplacementField3 up = upsample_field(f, fine);
    for (std::size_t p = 0; p < fine.voxel_count(); ++p) {
        CHECK(up.data[3 * p] == doctest::Approx(1.5).epsilon(1e-15));
        CHECK(up.data[3 * p + 1] == doctest::Approx(-2.5).epsilon(1e-15));
        CHECK(up.data[3 * p + 2] == doctest::Approx(0.25).epsilon(1e-15));
    }
    const DisplacementField3 zero = upsample_field(DisplacementField3(coarse), fine);
    for (double d : zero.data) CHECK(d == 0.0);
}

TEST_CASE("upsample_field reproduces a linear field inside the coarse hull") {
    const GridSpec fine = make_grid(9, 9, 9);
    const GridSpec coarse = downsample_grid(fine, 2);
    DisplacementField3 f(coarse);
    for (int k = 0; k < coarse.dims[2]; ++k)
        for (int j = 0; j < coarse.dims[1]; ++j)
            for (int i = 0; i < coarse.dims[0]; ++i) {
                const auto p = coarse.position(i, j, k);
                f.at(i, j, k, 0) = 0.25 * p[0];
            }
    const DisplacementField3 up = upsample_field(f, fine);
    // trilinear reproduces linears where interpolation (not clamping) applies
    for (int k = 1; k < 8; ++k)
        for (int j = 1; j < 8; ++j)
            for (int i = 1; i < 8; ++i) {
                const auto p = fine.position(i, j, k);
                CHECK(up.at(i, j, k, 0) == doctest::Approx(0.25 * p[0]).epsilon(1e-12));
            }
}

TEST_CASE("upsample_field rejects extent mismatches beyond half a coarse voxel") {
    const GridSpec coarse = downsample_grid(make_grid(8, 8, 8), 2);
    GridSpec other = make_grid(8, 8, 8);
    other.origin[0] += 5.0;
    CHECK_THROWS_AS(upsample_field(DisplacementField3(coarse), other), ValidationError);
}

TEST_CASE("accumulate_fields identities and arithmetic") {
    const GridSpec g = make_grid(4, 4, 4);
    Rng rng(3);
    DisplacementField3 f(g);
    for (double& d : f.data) d = rng.uniform(-1.0, 1.0);

    const DisplacementField3 with_zero = accumulate_fields({f, DisplacementField3(g)});
    CHECK(with_zero.data == f.data);

    const DisplacementField3 cancel = accumulate_fields({f, scale_field(f, -1.0)});
    for (double d : cancel.data) CHECK(d == 0.0);

    DisplacementField3 ex(g), ey(g), ez(g);
    for (std::size_t p = 0; p < g.voxel_count(); ++p) {
        ex.data[3 * p] = 1.0;
        ey.data[3 * p + 1] = 1.0;
        ez.data[3 * p + 2] = 1.0;
    }
    const DisplacementField3 sum = accumulate_fields({ex, ey, ez});
    for (std::size_t p = 0; p < g.voxel_count(); ++p) {
        CHECK(sum.data[3 * p] == 1.0);
        CHECK(sum.data[3 * p + 1] == 1.0);
        CHECK(sum.data[3 * p + 2] == 1.0);
    }
}

TEST_CASE("accumulate_fields is order independent within tolerance") {
    const GridSpec g = make_grid(5, 4, 3);
    Rng rng(17);
    DisplacementField3 a(g), b(g), c(g);
    for (double& d : a.data) d = rng.uniform(-2.0, 2.0);
    for (double& d : b.data) d = rng.uniform(-2.0, 2.0);
    for (double& d : c.data) d = rng.uniform(-2.0, 2.0);
    const DisplacementField3 abc = accumulate_fields({a, b, c});
    const DisplacementField3 cba = accumulate_fields({c, b, a});
    for (std::size_t i = 0; i < abc.data.size(); ++i)
        CHECK(abc.data[i] == doctest::Approx(cba.data[i]).epsilon(1e-6));
}

TEST_CASE("downsample then upsample preserves constant fields exactly") {
    const GridSpec fine = make_grid(10, 10, 10);
    Volume3 v(fine, -3.75);
    const Volume3 down = downsample(v, 2);
    for (double d : down.data) CHECK(d == -3.75);

    DisplacementField3 f(downsample_grid(fine, 2));
    for (std::size_t p = 0; p < f.grid.voxel_count(); ++p) f.data[3 * p + 2] = 9.5;
    const DisplacementField3 up = upsample_field(f, fine);
    for (std::size_t p = 0; p < fine.voxel_count(); ++p) CHECK(up.data[3 * p + 2] == 9.5);
}

TEST_CASE("gaussian_smooth_field passes constants through unchanged") {
    const GridSpec g = make_grid(8, 8, 8);
    DisplacementField3 f(g);
    for (std::size_t p = 0; p < g.voxel_count(); ++p) f.data[3 * p] = 2.5;
    const DisplacementField3 s = gaussian_smooth_field(f, 1.5);
    for (std::size_t p = 0; p < g.voxel_count(); ++p)
        CHECK(s.data[3 * p] == doctest::Approx(2.5).epsilon(1e-12));
}
