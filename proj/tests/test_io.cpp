#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cardiomech/errors.hpp"
#include "cardiomech/pipeline_config.hpp"
#include "cardiomech/rng.hpp"
#include "cardiomech/volume_io.hpp"

using namespace cardiomech;

namespace {

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "cardiomech_io_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void put_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
}

GridSpec small_grid() {
    GridSpec g;
    g.dims = {5, 4, 3};
    g.spacing = {1.25, 1.0, 2.5};
    g.origin = {-3.0, 0.5, 11.0};
    return g;
}

} // namespace

TEST_CASE("volume round trip is bit-identical on disk") {
    const auto dir = temp_dir();
    Rng rng(1);
    Volume3 v(small_grid());
    for (double& d : v.data) d = rng.uniform(-100.0, 100.0);

    const auto p1 = dir / "vol_a.vol";
    const auto p2 = dir / "vol_b.vol";
    write_volume(p1, v);
    const Volume3 back = read_image(p1);
    CHECK(back.grid.same_as(v.grid));
    write_volume(p2, back);
    CHECK(file_bytes(p1) == file_bytes(p2));
}

TEST_CASE("field and label round trips preserve grid and values") {
    const auto dir = temp_dir();
    Rng rng(2);
    DisplacementField3 f(small_grid());
    for (double& d : f.data) d = rng.uniform(-5.0, 5.0);
    write_volume(dir / "field.vol", f);
    const DisplacementField3 f2 = read_field(dir / "field.vol");
    CHECK(f2.grid.same_as(f.grid));
    for (std::size_t i = 0; i < f.data.size(); ++i)
        CHECK(f2.data[i] == static_cast<double>(static_cast<float>(f.data[i])));

    LabelMap3 l(small_grid());
    for (auto& d : l.data) d = static_cast<std::uint8_t>(rng.below(7));
    write_volume(dir / "labels.vol", l);
    const LabelMap3 l2 = read_labels(dir / "labels.vol");
    CHECK(l2.data == l.data);

    const auto p2 = dir / "labels2.vol";
    write_volume(p2, l2);
    CHECK(file_bytes(dir / "labels.vol") == file_bytes(p2));
}

TEST_CASE("typed readers enforce the object type") {
    const auto dir = temp_dir();
    write_volume(dir / "img.vol", Volume3(small_grid(), 1.0));
    CHECK_THROWS_AS(read_field(dir / "img.vol"), IoError);
    CHECK_THROWS_AS(read_labels(dir / "img.vol"), IoError);
}

TEST_CASE("truncated payloads name expected and actual sizes") {
    const auto dir = temp_dir();
    const auto p = dir / "trunc.vol";
    write_volume(p, Volume3(small_grid(), 2.0));
    std::string bytes = file_bytes(p);
    bytes.pop_back();
    put_bytes(p, bytes);
    try {
        read_volume(p);
        FAIL("expected a truncation error");
    } catch (const IoError& e) {
        CHECK(e.kind() == IoError::Kind::TruncatedPayload);
        CHECK(std::string(e.what()).find("240") != std::string::npos);  // 5*4*3*4 bytes expected
        CHECK(std::string(e.what()).find("239") != std::string::npos);
    }
}

TEST_CASE("schema violations and unknown element types are distinct errors") {
    const auto dir = temp_dir();
    const auto p = dir / "bad.vol";
    write_volume(p, Volume3(small_grid(), 2.0));
    std::string bytes = file_bytes(p);

    SUBCASE("Channels=3 with ObjectType=Image") {
        const auto pos = bytes.find("Channels = 1");
        std::string evil = bytes.substr(0, pos) + "Channels = 3" + bytes.substr(pos + 12);
        put_bytes(p, evil);
        try {
            read_volume(p);
            FAIL("expected a schema error");
        } catch (const IoError& e) {
            CHECK(e.kind() == IoError::Kind::SchemaViolation);
        }
    }
    SUBCASE("unknown ElementType") {
        const auto pos = bytes.find("ElementType = FLOAT32");
        std::string evil = bytes.substr(0, pos) + "ElementType = FLOAT64" + bytes.substr(pos + 21);
        put_bytes(p, evil);
        try {
            read_volume(p);
            FAIL("expected an element-type error");
        } catch (const IoError& e) {
            CHECK(e.kind() == IoError::Kind::UnknownElementType);
        }
    }
    SUBCASE("unknown header key") {
        std::string evil = "Banana = yes\n" + bytes;
        put_bytes(p, evil);
        try {
            read_volume(p);
            FAIL("expected a header error");
        } catch (const IoError& e) {
            CHECK(e.kind() == IoError::Kind::MalformedHeader);
        }
    }
    SUBCASE("missing separator") {
        std::string evil = "ObjectTypeImage\n" + bytes.substr(bytes.find('\n') + 1);
        put_bytes(p, evil);
        try {
            read_volume(p);
            FAIL("expected a header error");
        } catch (const IoError& e) {
            CHECK(e.kind() == IoError::Kind::MalformedHeader);
        }
    }
}

TEST_CASE("pipeline config serializes all defaults and round trips") {
    const PipelineConfig cfg = default_pipeline_config();
    const std::string text = pipeline_config_to_json(cfg);
    for (const char* key : {"registration", "stages", "lambda", "material", "sim",
                            "field_smoothing_sigma_mm", "convergence_tol", "moduli_window", "energy_floor",
                            "lwv_window", "n_adjacent", "selection", "cv_folds", "classifier", "seed"}) {
        CHECK(text.find(key) != std::string::npos);
    }
    const PipelineConfig back = pipeline_config_from_json(text);
    CHECK(pipeline_config_to_json(back) == text);
}

TEST_CASE("pipeline config rejects unknown keys at every level") {
    CHECK_THROWS_AS(pipeline_config_from_json(R"({"lambda": 0.2})"), ValidationError);
    CHECK_THROWS_AS(pipeline_config_from_json(R"({"registration": {"lamda": 0.2}})"), ValidationError);
    CHECK_THROWS_AS(pipeline_config_from_json(R"({"registration": {"sim": {"window": [3]}}})"),
                    ValidationError);
    CHECK_THROWS_AS(pipeline_config_from_json(R"({"selection": {"classifer": "logreg"}})"),
                    ValidationError);
    CHECK_THROWS_AS(pipeline_config_from_json("not json"), ValidationError);
}

TEST_CASE("pipeline config validates stage ordering") {
    const std::string bad = R"({"registration": {"stages": [
        {"scale_factor": 2, "iterations": 5, "step_size": 0.2},
        {"scale_factor": 4, "iterations": 5, "step_size": 0.2}]}})";
    CHECK_THROWS_AS(pipeline_config_from_json(bad), ValidationError);
    const std::string no_full_res = R"({"registration": {"stages": [
        {"scale_factor": 4, "iterations": 5, "step_size": 0.2},
        {"scale_factor": 2, "iterations": 5, "step_size": 0.2}]}})";
    CHECK_THROWS_AS(pipeline_config_from_json(no_full_res), ValidationError);
}

TEST_CASE("selection and model JSON round trip") {
    SelectionResult sel;
    sel.selected = {"mu_1_mean_ED"};
    sel.discarded = {"mu_1_std_ED"};
    sel.acc_max = 0.75;
    sel.trace.push_back({1, "mu_1_std_ED", "removed", 0.75});
    const SelectionResult sel2 = selection_result_from_json(selection_result_to_json(sel));
    CHECK(sel2.selected == sel.selected);
    CHECK(sel2.discarded == sel.discarded);
    CHECK(sel2.acc_max == sel.acc_max);
    CHECK(sel2.trace.size() == 1);
    CHECK(sel2.trace[0].action == "removed");

    LogRegModel model;
    model.classes = class_names();
    model.feature_names = {"f0", "f1"};
    model.weights.assign(5, std::vector<double>(3, 0.5));
    model.feat_mean = {0.0, 1.0};
    model.feat_std = {1.0, 2.0};
    const LogRegModel model2 = logreg_model_from_json(logreg_model_to_json(model));
    CHECK(model2.weights == model.weights);
    CHECK(model2.feat_mean == model.feat_mean);
}
