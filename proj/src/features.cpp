#include "cardiomech/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cardiomech/errors.hpp"

namespace cardiomech {

namespace {

const std::vector<std::string> kValues = {"mu", "kappa", "phimag", "vol"};
const std::vector<std::string> kStats = {"mean", "std", "p10", "p90", "ratio"};
const std::vector<std::string> kPhases = {"ED", "ES", "EDoverES"};

bool is_label_token(const std::string& t) {
    if (t == "total") return true;
    return t.size() == 1 && t[0] >= '1' && t[0] <= '6';
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

} // namespace

std::string FeatureName::render() const {
    std::string out = value;
    for (const auto& l : labels) out += "_" + l;
    out += "_" + stat + "_" + phase;
    return out;
}

FeatureName FeatureName::parse(const std::string& name) {
    std::vector<std::string> tokens;
    std::string tok;
    std::istringstream is(name);
    while (std::getline(is, tok, '_')) tokens.push_back(tok);
    if (tokens.size() != 4 && tokens.size() != 5)
        throw ValidationError("feature name '" + name + "' does not parse");
    FeatureName f;
    f.value = tokens.front();
    f.phase = tokens.back();
    f.stat = tokens[tokens.size() - 2];
    for (std::size_t i = 1; i + 2 < tokens.size(); ++i) f.labels.push_back(tokens[i]);
    if (!contains(kValues, f.value) || !contains(kStats, f.stat) || !contains(kPhases, f.phase))
        throw ValidationError("feature name '" + name + "' does not parse");
    for (const auto& l : f.labels) {
        if (!is_label_token(l)) throw ValidationError("feature name '" + name + "' has label '" + l + "'");
    }
    return f;
}

const std::vector<std::string>& canonical_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        const std::vector<std::string> maps = {"mu", "kappa", "phimag"};
        const std::vector<std::string> stats = {"mean", "std", "p10", "p90"};
        const std::vector<std::string> phases = {"ED", "ES"};
        // (a) regional statistics of the three voxel maps
        for (const auto& v : maps)
            for (int l = 1; l <= 6; ++l)
                for (const auto& s : stats)
                    for (const auto& p : phases)
                        out.push_back(v + "_" + std::to_string(l) + "_" + s + "_" + p);
        // (b) label volumes
        for (int l = 1; l <= 6; ++l)
            for (const auto& p : phases) out.push_back("vol_" + std::to_string(l) + "_mean_" + p);
        // (c) ED/ES phase ratios of label means and volumes
        for (const auto& v : kValues)
            for (int l = 1; l <= 6; ++l) out.push_back(v + "_" + std::to_string(l) + "_ratio_EDoverES");
        // (d) unordered label-pair ratios within each phase
        for (const auto& v : kValues)
            for (int a = 1; a <= 6; ++a)
                for (int b = a + 1; b <= 6; ++b)
                    for (const auto& p : phases)
                        out.push_back(v + "_" + std::to_string(a) + "_" + std::to_string(b) + "_ratio_" + p);
        // (e) volume fractions of the total foreground
        for (int l = 1; l <= 6; ++l)
            for (const auto& p : phases) out.push_back("vol_" + std::to_string(l) + "_total_ratio_" + p);
        return out;
    }();
    return names;
}

RegionStats region_stats(const Volume3& map, const LabelMap3& labels, int label) {
    if (!map.grid.same_as(labels.grid)) throw ValidationError("region_stats: grid mismatch");
    std::vector<double> values;
    for (std::size_t v = 0; v < labels.data.size(); ++v)
        if (labels.data[v] == label) values.push_back(map.data[v]);
    if (values.empty())
        throw ValidationError("region_stats: label " + std::to_string(label) + " absent from label map");

    RegionStats st;
    const double n = static_cast<double>(values.size());
    for (double v : values) st.mean += v;
    st.mean /= n;
    for (double v : values) st.std_dev += (v - st.mean) * (v - st.mean);
    st.std_dev = std::sqrt(st.std_dev / n);

    std::sort(values.begin(), values.end());
    auto percentile = [&](double q) {
        const double pos = q * (n - 1.0);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        if (lo + 1 >= values.size()) return values.back();
        return values[lo] + frac * (values[lo + 1] - values[lo]);
    };
    st.p10 = percentile(0.10);
    st.p90 = percentile(0.90);
    return st;
}

Volume3 field_magnitude(const DisplacementField3& field) {
    Volume3 out(field.grid);
    for (std::size_t v = 0; v < out.data.size(); ++v) {
        const double x = field.data[3 * v], y = field.data[3 * v + 1], z = field.data[3 * v + 2];
        out.data[v] = std::sqrt(x * x + y * y + z * z);
    }
    return out;
}

double label_volume(const LabelMap3& labels, int label) {
    std::size_t count = 0;
    for (std::uint8_t v : labels.data) count += (v == label);
    const auto& s = labels.grid.spacing;
    return static_cast<double>(count) * s[0] * s[1] * s[2] / 1000.0;
}

namespace {

constexpr double kRatioGuard = 1e-9;

struct PhaseQuantities {
    // label means per map value, indexed [value][label-1]; value order mu, kappa, phimag
    std::array<std::array<RegionStats, 6>, 3> stats;
    std::array<double, 6> volumes;
    double total_volume = 0.0;
};

PhaseQuantities phase_quantities(const PhaseMaps& maps, const std::string& phase) {
    for (int l = 1; l <= 6; ++l) {
        bool present = false;
        for (std::uint8_t v : maps.labels.data) {
            if (v == l) {
                present = true;
                break;
            }
        }
        if (!present)
            throw ValidationError("extract_features: label " + std::to_string(l) + " absent at " + phase);
    }
    PhaseQuantities q;
    const Volume3* vols[3] = {&maps.mu_map, &maps.kappa_map, &maps.phimag};
    for (int m = 0; m < 3; ++m)
        for (int l = 1; l <= 6; ++l) q.stats[static_cast<std::size_t>(m)][static_cast<std::size_t>(l - 1)] =
            region_stats(*vols[m], maps.labels, l);
    for (int l = 1; l <= 6; ++l) {
        q.volumes[static_cast<std::size_t>(l - 1)] = label_volume(maps.labels, l);
        q.total_volume += q.volumes[static_cast<std::size_t>(l - 1)];
    }
    return q;
}

} // namespace

FeatureVector extract_features(const std::string& case_id, const std::string& class_label,
                               const PhaseMaps& ed, const PhaseMaps& es) {
    FeatureVector out;
    out.case_id = case_id;
    out.class_label = class_label;
    out.names = canonical_feature_names();
    out.values.reserve(out.names.size());

    const PhaseQuantities qed = phase_quantities(ed, "ED");
    const PhaseQuantities qes = phase_quantities(es, "ES");

    auto guarded_ratio = [&](double num, double den, const std::string& name) {
        if (std::fabs(den) < kRatioGuard) {
            out.warnings.push_back(name + ": denominator below guard, feature set to 0");
            return 0.0;
        }
        return num / den;
    };
    auto phase_of = [&](const std::string& p) -> const PhaseQuantities& { return p == "ED" ? qed : qes; };
    auto stat_value = [](const RegionStats& st, const std::string& stat) {
        if (stat == "mean") return st.mean;
        if (stat == "std") return st.std_dev;
        if (stat == "p10") return st.p10;
        return st.p90;
    };
    auto map_index = [](const std::string& v) { return v == "mu" ? 0 : v == "kappa" ? 1 : 2; };
    // The scalar a named quantity compares by: label mean for the maps, the
    // volume for "vol".
    auto quantity = [&](const std::string& value, int label, const PhaseQuantities& q) {
        if (value == "vol") return q.volumes[static_cast<std::size_t>(label - 1)];
        return q.stats[static_cast<std::size_t>(map_index(value))][static_cast<std::size_t>(label - 1)].mean;
    };

    for (const std::string& name : out.names) {
        const FeatureName f = FeatureName::parse(name);
        double v = 0.0;
        if (f.stat != "ratio") {
            const int label = f.labels[0][0] - '0';
            if (f.value == "vol") {
                v = phase_of(f.phase).volumes[static_cast<std::size_t>(label - 1)];
            } else {
                v = stat_value(
                    phase_of(f.phase).stats[static_cast<std::size_t>(map_index(f.value))][static_cast<std::size_t>(label - 1)],
                    f.stat);
            }
        } else if (f.phase == "EDoverES") {
            const int label = f.labels[0][0] - '0';
            v = guarded_ratio(quantity(f.value, label, qed), quantity(f.value, label, qes), name);
        } else if (f.labels.size() == 2 && f.labels[1] == "total") {
            const int label = f.labels[0][0] - '0';
            const PhaseQuantities& q = phase_of(f.phase);
            v = guarded_ratio(q.volumes[static_cast<std::size_t>(label - 1)], q.total_volume, name);
        } else {
            const int a = f.labels[0][0] - '0';
            const int b = f.labels[1][0] - '0';
            const PhaseQuantities& q = phase_of(f.phase);
            v = guarded_ratio(quantity(f.value, a, q), quantity(f.value, b, q), name);
        }
        out.values.push_back(v);
    }
    return out;
}

namespace {

std::array<double, 3> mask_centroid(const LabelMap3& mask) {
    double sx = 0, sy = 0, sz = 0, n = 0;
    const int nx = mask.grid.dims[0], ny = mask.grid.dims[1], nz = mask.grid.dims[2];
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                if (mask.at(i, j, k)) {
                    sx += i;
                    sy += j;
                    sz += k;
                    n += 1;
                }
    return {sx / n, sy / n, sz / n};
}

// Offsets within Euclidean voxel distance `radius`.
std::vector<std::array<int, 3>> ball_offsets(int radius) {
    std::vector<std::array<int, 3>> out;
    for (int dk = -radius; dk <= radius; ++dk)
        for (int dj = -radius; dj <= radius; ++dj)
            for (int di = -radius; di <= radius; ++di)
                if (di * di + dj * dj + dk * dk <= radius * radius) out.push_back({di, dj, dk});
    return out;
}

bool near_mask(const LabelMap3& mask, int i, int j, int k, const std::vector<std::array<int, 3>>& offsets) {
    const auto& d = mask.grid.dims;
    for (const auto& o : offsets) {
        const int ii = i + o[0], jj = j + o[1], kk = k + o[2];
        if (ii < 0 || jj < 0 || kk < 0 || ii >= d[0] || jj >= d[1] || kk >= d[2]) continue;
        if (mask.at(ii, jj, kk)) return true;
    }
    return false;
}

} // namespace

LabelMap3 split_acdc_labels(const LabelMap3& lv_cavity, const LabelMap3& myocardium,
                            const LabelMap3& rv_cavity) {
    if (!lv_cavity.grid.same_as(myocardium.grid) || !lv_cavity.grid.same_as(rv_cavity.grid))
        throw ValidationError("split_acdc_labels: grid mismatch");
    const char* names[3] = {"LV cavity", "myocardium", "RV cavity"};
    const LabelMap3* masks[3] = {&lv_cavity, &myocardium, &rv_cavity};
    for (int m = 0; m < 3; ++m) {
        bool any = false;
        for (std::uint8_t v : masks[m]->data) any = any || v != 0;
        if (!any) throw ValidationError(std::string("split_acdc_labels: empty mask: ") + names[m]);
    }
    for (std::size_t v = 0; v < lv_cavity.data.size(); ++v) {
        const int hits = (lv_cavity.data[v] != 0) + (myocardium.data[v] != 0) + (rv_cavity.data[v] != 0);
        if (hits > 1) throw ValidationError("split_acdc_labels: masks overlap");
    }

    const GridSpec& g = lv_cavity.grid;
    LabelMap3 out(g);
    const std::array<double, 3> lv_c = mask_centroid(lv_cavity);
    const std::array<double, 3> rv_c = mask_centroid(rv_cavity);
    const bool rv_on_positive_x = rv_c[0] >= lv_c[0];

    static const std::vector<std::array<int, 3>> near2 = ball_offsets(2);
    static const std::vector<std::array<int, 3>> near3 = ball_offsets(3);

    const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                if (lv_cavity.at(i, j, k)) {
                    out.at(i, j, k) = 3;
                } else if (rv_cavity.at(i, j, k)) {
                    out.at(i, j, k) = 5;
                } else if (myocardium.at(i, j, k)) {
                    if (near_mask(rv_cavity, i, j, k, near2)) {
                        out.at(i, j, k) = 4;  // RV myocardium proxy
                    } else {
                        const bool toward_rv = rv_on_positive_x ? (i >= lv_c[0]) : (i <= lv_c[0]);
                        out.at(i, j, k) = toward_rv ? 1 : 2;
                    }
                }
            }
    // Pericardial shell: dilation of the union minus the union.
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                if (out.at(i, j, k) != 0) continue;
                if (near_mask(lv_cavity, i, j, k, near3) || near_mask(myocardium, i, j, k, near3) ||
                    near_mask(rv_cavity, i, j, k, near3))
                    out.at(i, j, k) = 6;
            }
    return out;
}

namespace {

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_feature_csv(const std::filesystem::path& path, const std::vector<FeatureVector>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoError::Kind::FileAccess, "cannot open for writing: " + path.string());
    out << "case_id,class";
    for (const auto& n : canonical_feature_names()) out << "," << n;
    out << "\n";
    for (const auto& row : rows) {
        if (row.names != canonical_feature_names())
            throw ValidationError("write_feature_csv: row does not follow the canonical enumeration");
        out << row.case_id << "," << row.class_label;
        for (double v : row.values) out << "," << format_value(v);
        out << "\n";
    }
}

Dataset dataset_from_features(const std::vector<FeatureVector>& rows) {
    Dataset d;
    d.feature_names = canonical_feature_names();
    for (const auto& row : rows) {
        d.case_ids.push_back(row.case_id);
        d.labels.push_back(class_index(row.class_label));
        d.x.push_back(row.values);
    }
    d.validate();
    return d;
}

Dataset read_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoError::Kind::FileAccess, "cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("feature CSV is empty: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    std::string cell;
    std::istringstream hs(line);
    while (std::getline(hs, cell, ',')) header.push_back(cell);
    if (header.size() < 3 || header[0] != "case_id" || header[1] != "class")
        throw ValidationError("feature CSV header must start with case_id,class");

    Dataset d;
    d.feature_names.assign(header.begin() + 2, header.end());
    for (const auto& n : d.feature_names) FeatureName::parse(n);

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != header.size())
            throw ValidationError("feature CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
        d.case_ids.push_back(cells[0]);
        d.labels.push_back(class_index(cells[1]));
        std::vector<double> row;
        row.reserve(cells.size() - 2);
        for (std::size_t i = 2; i < cells.size(); ++i) {
            std::size_t used = 0;
            const double v = std::stod(cells[i], &used);
            if (used != cells[i].size()) throw ValidationError("feature CSV: bad number '" + cells[i] + "'");
            row.push_back(v);
        }
        d.x.push_back(std::move(row));
    }
    d.validate();
    return d;
}

} // namespace cardiomech
