#include <doctest.h>

#include "cardiomech/errors.hpp"
#include "cardiomech/phantom.hpp"
#include "cardiomech/propagation.hpp"
#include "cardiomech/rng.hpp"

using namespace cardiomech;

namespace {

GridSpec make_grid(int n) {
    GridSpec g;
    g.dims = {n, n, n};
    return g;
}

RegConfig fast_config() {
    RegConfig cfg;
    cfg.stages = {{2, 30, 0.5}, {1, 20, 0.25}};
    return cfg;
}

} // namespace

TEST_CASE("dice identities") {
    const GridSpec g = make_grid(6);
    LabelMap3 a(g), b(g);
    for (int i = 0; i < 4; ++i) a.data[static_cast<std::size_t>(i)] = 1;
    SUBCASE("identical masks") { CHECK(dice(a, a, 1) == doctest::Approx(1.0)); }
    SUBCASE("disjoint masks") {
        for (int i = 10; i < 14; ++i) b.data[static_cast<std::size_t>(i)] = 1;
        CHECK(dice(a, b, 1) == doctest::Approx(0.0));
    }
    SUBCASE("half overlap") {
        for (int i = 2; i < 6; ++i) b.data[static_cast<std::size_t>(i)] = 1;
        CHECK(dice(a, b, 1) == doctest::Approx(0.5));
        CHECK(dice(b, a, 1) == doctest::Approx(0.5));
    }
    SUBCASE("both empty") { CHECK(dice(a, b, 7) == doctest::Approx(1.0)); }
    SUBCASE("grid mismatch") { CHECK_THROWS_AS(dice(a, LabelMap3(make_grid(7)), 1), ValidationError); }
}

TEST_CASE("lwv_fuse degenerate and unanimous votes") {
    const GridSpec g = make_grid(10);
    Rng rng(3);
    Volume3 target(g);
    for (double& d : target.data) d = rng.normal(100.0, 15.0);

    FusionCandidate self;
    self.warped_frame = target;
    self.warped_labels = LabelMap3(g);
    for (std::size_t v = 0; v < g.voxel_count(); ++v)
        self.warped_labels.data[v] = static_cast<std::uint8_t>(v % 3);

    SUBCASE("single candidate passes through") {
        const LabelMap3 fused = lwv_fuse(target, {self}, 5);
        CHECK(fused.data == self.warped_labels.data);
    }
    SUBCASE("unanimous candidates pass through") {
        const LabelMap3 fused = lwv_fuse(target, {self, self, self}, 5);
        CHECK(fused.data == self.warped_labels.data);
    }
    SUBCASE("empty candidate list is rejected") {
        CHECK_THROWS_AS(lwv_fuse(target, {}, 5), ValidationError);
    }
}

TEST_CASE("lwv_fuse weighted majority follows local similarity") {
    const GridSpec g = make_grid(12);
    Rng rng(9);
    Volume3 target(g);
    for (double& d : target.data) d = rng.normal(100.0, 20.0);

    FusionCandidate strong;  // matches the target, weight near 1
    strong.warped_frame = target;
    strong.warped_labels = LabelMap3(g, 2);

    FusionCandidate weak;  // constant frame, weight 0 via the eps guard
    weak.warped_frame = Volume3(g, 100.0);
    weak.warped_labels = LabelMap3(g, 5);

    const LabelMap3 fused = lwv_fuse(target, {strong, weak}, 5);
    for (std::uint8_t l : fused.data) CHECK(l == 2);
}

TEST_CASE("equal weights reduce lwv to majority with a low-label tie break") {
    const GridSpec g = make_grid(8);
    Rng rng(11);
    Volume3 target(g);
    for (double& d : target.data) d = rng.normal(50.0, 10.0);

    FusionCandidate c1, c2;
    c1.warped_frame = target;  // both identical frames: identical weights
    c2.warped_frame = target;
    c1.warped_labels = LabelMap3(g, 4);
    c2.warped_labels = LabelMap3(g, 1);
    const LabelMap3 fused = lwv_fuse(target, {c1, c2}, 5);
    for (std::uint8_t l : fused.data) CHECK(l == 1);  // tie toward the smaller label

    FusionCandidate c3;
    c3.warped_frame = target;
    c3.warped_labels = LabelMap3(g, 4);
    const LabelMap3 majority = lwv_fuse(target, {c1, c2, c3}, 5);
    for (std::uint8_t l : majority.data) CHECK(l == 4);
}

TEST_CASE("lwv output labels stay within the candidate label set") {
    const GridSpec g = make_grid(8);
    Rng rng(13);
    Volume3 target(g);
    for (double& d : target.data) d = rng.normal(0.0, 5.0);
    FusionCandidate a, b;
    a.warped_frame = target;
    b.warped_frame = Volume3(g, 1.0);
    a.warped_labels = LabelMap3(g);
    b.warped_labels = LabelMap3(g);
    for (std::size_t v = 0; v < g.voxel_count(); ++v) {
        a.warped_labels.data[v] = static_cast<std::uint8_t>(rng.below(2) ? 3 : 0);
        b.warped_labels.data[v] = static_cast<std::uint8_t>(rng.below(2) ? 6 : 0);
    }
    const LabelMap3 fused = lwv_fuse(target, {a, b}, 3);
    for (std::uint8_t l : fused.data) CHECK((l == 0 || l == 3 || l == 6));
}

TEST_CASE("propagate between identical frames keeps labels nearly unchanged") {
    const PhantomCase c = generate_case(default_phantom_params({32, 32, 32}, {1, 1, 1}, 4), 31);
    CineSequence seq = c.seq;
    seq.frames[1] = seq.frames[0];  // src == dst in content
    auto [labels, field] = propagate(seq, 0, 1, fast_config());
    std::size_t flips = 0;
    for (std::size_t v = 0; v < labels.data.size(); ++v) flips += labels.data[v] != seq.labels_ed.data[v];
    CHECK(static_cast<double>(flips) / static_cast<double>(labels.data.size()) < 0.01);
}

TEST_CASE("propagate requires labels at the source frame") {
    const PhantomCase c = generate_case(default_phantom_params({32, 32, 32}, {1, 1, 1}, 5), 37);
    CHECK_THROWS_AS(propagate(c.seq, 1, 2, fast_config()), ValidationError);
}

TEST_CASE("adjacent-frame propagation on the phantom scores high dice") {
    const PhantomCase c = generate_case(default_phantom_params({32, 32, 32}, {1, 1, 1}, 6), 41);
    auto [labels, field] = propagate(c.seq, 0, 1, fast_config());
    for (Structure s : {Structure::LvCavity, Structure::RvCavity, Structure::Myocardium}) {
        CHECK(dice_structure(labels, c.frame_labels[1], s) >= 0.92);
    }
}

TEST_CASE("multi_frame_segment with n_adjacent 1 equals direct propagation") {
    const PhantomCase c = generate_case(default_phantom_params({32, 32, 32}, {1, 1, 1}, 4), 43);
    const RegConfig cfg = fast_config();
    const LabelMap3 fused = multi_frame_segment(c.seq, CardiacPhase::ES, 1, cfg);
    auto [direct, field] = propagate(c.seq, c.seq.ed_index, c.seq.es_index, cfg);
    CHECK(fused.data == direct.data);
}

TEST_CASE("multi_frame_segment validates its inputs") {
    const PhantomCase c = generate_case(default_phantom_params({32, 32, 32}, {1, 1, 1}, 4), 47);
    CHECK_THROWS_AS(multi_frame_segment(c.seq, CardiacPhase::ES, 0, fast_config()), ValidationError);
}

TEST_CASE("registered propagation never beats the analytic-field upper bound") {
    const PhantomCase c = generate_case(default_phantom_params({32, 32, 32}, {1, 1, 1}, 6), 53);
    const RegConfig cfg = fast_config();
    auto [registered, field] = propagate(c.seq, c.seq.ed_index, c.seq.es_index, cfg);
    const DisplacementField3 gt = analytic_field(c.params, c.params.ed_index(), c.params.es_index());
    const LabelMap3 upper = warp_labels(c.seq.labels_ed, gt);
    for (int label = 1; label <= 6; ++label) {
        CHECK(dice(registered, c.seq.labels_es, label) <=
              dice(upper, c.seq.labels_es, label) + 1e-12);
    }
}
