#include <doctest.h>

#include <cmath>

#include "cardiomech/errors.hpp"
#include "cardiomech/kinematics.hpp"
#include "cardiomech/rng.hpp"

using namespace cardiomech;

namespace {

GridSpec make_grid(int n, double spacing = 1.0) {
    GridSpec g;
    g.dims = {n, n, n};
    g.spacing = {spacing, spacing, spacing};
    return g;
}

// u(x) = A x + b
DisplacementField3 linear_field(const GridSpec& g, const double a[3][3], const double b[3]) {
    DisplacementField3 f(g);
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                const auto p = g.position(i, j, k);
                for (int r = 0; r < 3; ++r)
                    f.at(i, j, k, r) = a[r][0] * p[0] + a[r][1] * p[1] + a[r][2] * p[2] + b[r];
            }
    return f;
}

void rotation_matrix(double angle, double r[3][3]) {
    // about the z axis
    r[0][0] = std::cos(angle);
    r[0][1] = -std::sin(angle);
    r[0][2] = 0;
    r[1][0] = std::sin(angle);
    r[1][1] = std::cos(angle);
    r[1][2] = 0;
    r[2][0] = 0;
    r[2][1] = 0;
    r[2][2] = 1;
}

} // namespace

TEST_CASE("deformation_gradient of a zero field is the identity") {
    const TensorField3 f = deformation_gradient(DisplacementField3(make_grid(5)));
    for (std::size_t v = 0; v < f.grid.voxel_count(); ++v)
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) CHECK(f.at(v, r, c) == (r == c ? 1.0 : 0.0));
}

TEST_CASE("deformation_gradient is exact on linear fields, boundaries included") {
    const GridSpec g = make_grid(6, 0.7);
    const double a[3][3] = {{0.05, -0.02, 0.01}, {0.03, 0.04, -0.01}, {0.0, 0.02, -0.03}};
    const double b[3] = {1.0, -2.0, 0.5};
    const TensorField3 f = deformation_gradient(linear_field(g, a, b));
    for (std::size_t v = 0; v < g.voxel_count(); ++v)
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                CHECK(f.at(v, r, c) == doctest::Approx(a[r][c] + (r == c ? 1 : 0)).epsilon(1e-12));
}

TEST_CASE("deformation_gradient of a rigid rotation field equals the rotation") {
    const GridSpec g = make_grid(6);
    double r[3][3];
    rotation_matrix(0.3, r);
    double a[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a[i][j] = r[i][j] - (i == j ? 1.0 : 0.0);
    const double b[3] = {0, 0, 0};
    const TensorField3 f = deformation_gradient(linear_field(g, a, b));
    for (std::size_t v = 0; v < g.voxel_count(); ++v)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(f.at(v, i, j) == doctest::Approx(r[i][j]).epsilon(1e-12));
}

TEST_CASE("deformation_gradient rejects degenerate grids") {
    GridSpec g;
    g.dims = {2, 5, 5};
    CHECK_THROWS_AS(deformation_gradient(DisplacementField3(g)), ValidationError);
}

TEST_CASE("cauchy_green of identity and rotations is the identity") {
    const GridSpec g = make_grid(3);
    const TensorField3 ident = deformation_gradient(DisplacementField3(g));
    for (CauchyGreenSide side : {CauchyGreenSide::Right, CauchyGreenSide::Left}) {
        const TensorField3 c = cauchy_green(ident, side);
        for (std::size_t v = 0; v < g.voxel_count(); ++v)
            for (int r = 0; r < 3; ++r)
                for (int cc = 0; cc < 3; ++cc) CHECK(c.at(v, r, cc) == (r == cc ? 1.0 : 0.0));
    }

    double rot[3][3];
    rotation_matrix(0.77, rot);
    TensorField3 f(g);
    for (std::size_t v = 0; v < g.voxel_count(); ++v)
        for (int r = 0; r < 3; ++r)
            for (int cc = 0; cc < 3; ++cc) f.at(v, r, cc) = rot[r][cc];
    for (CauchyGreenSide side : {CauchyGreenSide::Right, CauchyGreenSide::Left}) {
        const TensorField3 c = cauchy_green(f, side);
        for (int r = 0; r < 3; ++r)
            for (int cc = 0; cc < 3; ++cc)
                CHECK(c.at(0, r, cc) == doctest::Approx(r == cc ? 1.0 : 0.0).epsilon(1e-14));
    }
}

TEST_CASE("cauchy_green of a uniform stretch squares the stretch") {
    const GridSpec g = make_grid(3);
    TensorField3 f(g);
    for (std::size_t v = 0; v < g.voxel_count(); ++v)
        for (int r = 0; r < 3; ++r) f.at(v, r, r) = 1.1;
    const TensorField3 c = cauchy_green(f, CauchyGreenSide::Right);
    for (int r = 0; r < 3; ++r) CHECK(c.at(0, r, r) == doctest::Approx(1.21).epsilon(1e-14));
}

TEST_CASE("invariants of hand-computed tensors") {
    const GridSpec g = make_grid(3);
    TensorField3 c(g);

    SUBCASE("identity") {
        for (std::size_t v = 0; v < g.voxel_count(); ++v)
            for (int r = 0; r < 3; ++r) c.at(v, r, r) = 1.0;
        const InvariantMaps inv = invariants(c);
        CHECK(inv.i1.data[0] == doctest::Approx(3.0));
        CHECK(inv.i2.data[0] == doctest::Approx(3.0));
        CHECK(inv.i3.data[0] == doctest::Approx(1.0));
    }
    SUBCASE("isotropic 1.21") {
        for (std::size_t v = 0; v < g.voxel_count(); ++v)
            for (int r = 0; r < 3; ++r) c.at(v, r, r) = 1.21;
        const InvariantMaps inv = invariants(c);
        CHECK(inv.i1.data[0] == doctest::Approx(3.63).epsilon(1e-12));
        CHECK(inv.i2.data[0] == doctest::Approx(4.3923).epsilon(1e-12));
        CHECK(inv.i3.data[0] == doctest::Approx(1.771561).epsilon(1e-12));
    }
    SUBCASE("shear tensor") {
        for (std::size_t v = 0; v < g.voxel_count(); ++v) {
            c.at(v, 0, 0) = 1.0;
            c.at(v, 0, 1) = 0.5;
            c.at(v, 1, 0) = 0.5;
            c.at(v, 1, 1) = 1.25;
            c.at(v, 2, 2) = 1.0;
        }
        const InvariantMaps inv = invariants(c);
        CHECK(inv.i1.data[0] == doctest::Approx(3.25).epsilon(1e-12));
        CHECK(inv.i3.data[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("invariants match independently computed trace and determinant") {
    const GridSpec g = make_grid(3);
    Rng rng(23);
    TensorField3 f(g);
    for (std::size_t v = 0; v < g.voxel_count(); ++v)
        for (int r = 0; r < 3; ++r)
            for (int cc = 0; cc < 3; ++cc) f.at(v, r, cc) = (r == cc ? 1.0 : 0.0) + rng.uniform(-0.2, 0.2);
    const TensorField3 c = cauchy_green(f, CauchyGreenSide::Right);
    const InvariantMaps inv = invariants(c);
    for (std::size_t v = 0; v < g.voxel_count(); ++v) {
        const double tr = c.at(v, 0, 0) + c.at(v, 1, 1) + c.at(v, 2, 2);
        // determinant by cofactor expansion along the middle row
        const double det = -c.at(v, 1, 0) * (c.at(v, 0, 1) * c.at(v, 2, 2) - c.at(v, 0, 2) * c.at(v, 2, 1)) +
                           c.at(v, 1, 1) * (c.at(v, 0, 0) * c.at(v, 2, 2) - c.at(v, 0, 2) * c.at(v, 2, 0)) -
                           c.at(v, 1, 2) * (c.at(v, 0, 0) * c.at(v, 2, 1) - c.at(v, 0, 1) * c.at(v, 2, 0));
        CHECK(inv.i1.data[v] == doctest::Approx(tr).epsilon(1e-12));
        CHECK(inv.i3.data[v] == doctest::Approx(det).epsilon(1e-10));
    }
}

TEST_CASE("jacobian_det closed forms") {
    const GridSpec g = make_grid(3);
    TensorField3 f(g);
    for (std::size_t v = 0; v < g.voxel_count(); ++v)
        for (int r = 0; r < 3; ++r) f.at(v, r, r) = 1.0;
    CHECK(jacobian_det(f).data[0] == doctest::Approx(1.0));

    for (std::size_t v = 0; v < g.voxel_count(); ++v)
        for (int r = 0; r < 3; ++r) f.at(v, r, r) = 1.1;
    CHECK(jacobian_det(f).data[0] == doctest::Approx(1.331).epsilon(1e-12));

    for (std::size_t v = 0; v < g.voxel_count(); ++v) {
        for (int r = 0; r < 3; ++r)
            for (int cc = 0; cc < 3; ++cc) f.at(v, r, cc) = (r == cc ? 1.0 : 0.0);
        f.at(v, 0, 1) = 0.5;  // simple shear e1 (x) e2
    }
    CHECK(jacobian_det(f).data[0] == doctest::Approx(1.0));
}

TEST_CASE("nhe_density closed forms: rest, uniform scale, simple shear") {
    const GridSpec g = make_grid(8);
    const MaterialParams mat;

    const EnergyMaps rest = nhe_density(deformation_gradient(DisplacementField3(g)), mat);
    for (std::size_t v = 0; v < g.voxel_count(); ++v) {
        CHECK(std::fabs(rest.phi_dis.data[v]) <= 1e-12);
        CHECK(rest.phi_vol.data[v] == 0.0);
        CHECK(std::fabs(rest.phi.data[v]) <= 1e-12);
    }

    // u = 0.1 x: F = 1.1 I, linear so exact at every voxel
    const double scale[3][3] = {{0.1, 0, 0}, {0, 0.1, 0}, {0, 0, 0.1}};
    const double zero[3] = {0, 0, 0};
    const EnergyMaps iso = nhe_density(deformation_gradient(linear_field(g, scale, zero)), mat);
    for (std::size_t v = 0; v < g.voxel_count(); ++v) {
        CHECK(std::fabs(iso.phi_dis.data[v]) <= 1e-9);
        CHECK(iso.phi_vol.data[v] == doctest::Approx(0.109561).epsilon(1e-9));
        CHECK(iso.phi.data[v] == doctest::Approx(5.47805).epsilon(1e-9));
    }

    // u_x = 0.5 y: simple shear gamma = 0.5
    const double shear[3][3] = {{0, 0.5, 0}, {0, 0, 0}, {0, 0, 0}};
    const EnergyMaps sh = nhe_density(deformation_gradient(linear_field(g, shear, zero)), mat);
    for (std::size_t v = 0; v < g.voxel_count(); ++v) {
        CHECK(sh.phi_dis.data[v] == doctest::Approx(0.25).epsilon(1e-9));
        CHECK(std::fabs(sh.phi_vol.data[v]) <= 1e-9);
        CHECK(sh.phi.data[v] == doctest::Approx(0.25).epsilon(1e-9));
    }
}

TEST_CASE("nhe_density flags folds below the J floor") {
    const GridSpec g = make_grid(3);
    TensorField3 f(g);
    for (std::size_t v = 0; v < g.voxel_count(); ++v) {
        f.at(v, 0, 0) = -0.5;  // inverted along x
        f.at(v, 1, 1) = 1.0;
        f.at(v, 2, 2) = 1.0;
    }
    const EnergyMaps maps = nhe_density(f, MaterialParams{});
    CHECK(maps.fold_count == static_cast<std::int64_t>(g.voxel_count()));
}

TEST_CASE("nhe_total: zero field, uniform scale, rotation") {
    const GridSpec g = make_grid(32);
    const MaterialParams mat;
    CHECK(nhe_total(DisplacementField3(g), mat) == doctest::Approx(0.0).epsilon(1e-12));

    const double scale[3][3] = {{0.1, 0, 0}, {0, 0.1, 0}, {0, 0, 0.1}};
    const double zero[3] = {0, 0, 0};
    const double total = nhe_total(linear_field(g, scale, zero), mat);
    // linear fields make every stencil exact, so the 5% boundary allowance is
    // met with plenty to spare
    CHECK(total == doctest::Approx(5.47805).epsilon(0.05));
    CHECK(total == doctest::Approx(5.47805).epsilon(1e-9));

    double r[3][3];
    rotation_matrix(0.25, r);
    double a[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a[i][j] = r[i][j] - (i == j ? 1.0 : 0.0);
    CHECK(nhe_total(linear_field(g, a, zero), mat) <= 1e-6);
}

TEST_CASE("nhe energy is invariant under constant field offsets") {
    const GridSpec g = make_grid(8);
    Rng rng(5);
    DisplacementField3 f(g);
    for (double& d : f.data) d = rng.uniform(-0.3, 0.3);
    DisplacementField3 shifted = f;
    for (std::size_t p = 0; p < g.voxel_count(); ++p) {
        shifted.data[3 * p] += 17.0;
        shifted.data[3 * p + 1] -= 4.0;
        shifted.data[3 * p + 2] += 0.5;
    }
    CHECK(nhe_total(f, MaterialParams{}) ==
          doctest::Approx(nhe_total(shifted, MaterialParams{})).epsilon(1e-9));
}

TEST_CASE("isochoric fields have zero volumetric energy pointwise") {
    // simple shear has J = 1 exactly at every voxel
    const GridSpec g = make_grid(6);
    const double shear[3][3] = {{0, 0.37, 0}, {0, 0, 0}, {0, 0, 0}};
    const double zero[3] = {0, 0, 0};
    const EnergyMaps maps = nhe_density(deformation_gradient(linear_field(g, shear, zero)), MaterialParams{});
    for (std::size_t v = 0; v < g.voxel_count(); ++v) CHECK(maps.phi_vol.data[v] == 0.0);
}

TEST_CASE("volumetric purity: uniform scale has negligible distortional energy") {
    const GridSpec g = make_grid(6);
    const double scale[3][3] = {{0.07, 0, 0}, {0, 0.07, 0}, {0, 0, 0.07}};
    const double zero[3] = {0, 0, 0};
    const EnergyMaps maps = nhe_density(deformation_gradient(linear_field(g, scale, zero)), MaterialParams{});
    for (std::size_t v = 0; v < g.voxel_count(); ++v) CHECK(std::fabs(maps.phi_dis.data[v]) < 1e-9);
}

TEST_CASE("material params validate") {
    const MaterialParams bad{-1.0, 100.0};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_THROWS_AS(nhe_density(deformation_gradient(DisplacementField3(make_grid(3))), MaterialParams{},
                                0.0),
                    ValidationError);
}
