#include "cardiomech/volume_io.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cardiomech/errors.hpp"

static_assert(std::endian::native == std::endian::little, "payloads are little-endian raw arrays");

namespace cardiomech {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string header_text(const char* object_type, const GridSpec& g, const char* element_type,
                        int channels, std::size_t data_offset) {
    std::ostringstream os;
    os << "ObjectType = " << object_type << "\n";
    os << "NDims = 3\n";
    os << "DimSize = " << g.dims[0] << " " << g.dims[1] << " " << g.dims[2] << "\n";
    os << "ElementSpacing = " << format_double(g.spacing[0]) << " " << format_double(g.spacing[1]) << " "
       << format_double(g.spacing[2]) << "\n";
    os << "Offset = " << format_double(g.origin[0]) << " " << format_double(g.origin[1]) << " "
       << format_double(g.origin[2]) << "\n";
    os << "ElementType = " << element_type << "\n";
    os << "Channels = " << channels << "\n";
    os << "DataOffsetBytes = " << data_offset << "\n";
    return os.str();
}

void write_file(const std::filesystem::path& path, const char* object_type, const GridSpec& g,
                const char* element_type, int channels, const void* payload, std::size_t payload_bytes) {
    // DataOffsetBytes includes its own line; iterate until the length is consistent.
    std::string header = header_text(object_type, g, element_type, channels, 0);
    for (int pass = 0; pass < 4; ++pass) {
        std::string next = header_text(object_type, g, element_type, channels, header.size());
        if (next.size() == header.size()) {
            header = std::move(next);
            break;
        }
        header = std::move(next);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoError::Kind::FileAccess, "cannot open for writing: " + path.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
    if (!out) throw IoError(IoError::Kind::FileAccess, "write failed: " + path.string());
}

std::vector<float> to_f32(const std::vector<double>& data) {
    std::vector<float> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = static_cast<float>(data[i]);
    return out;
}

struct ParsedHeader {
    std::string object_type, element_type;
    GridSpec grid;
    int channels = 0;
    std::size_t data_offset = 0;
};

[[noreturn]] void malformed(const std::string& why) {
    throw IoError(IoError::Kind::MalformedHeader, "malformed header: " + why);
}

ParsedHeader parse_header(const std::string& bytes, const std::filesystem::path& path) {
    static const char* kKeys[] = {"ObjectType",     "NDims",    "DimSize",  "ElementSpacing",
                                  "Offset",         "ElementType", "Channels", "DataOffsetBytes"};
    std::map<std::string, std::string> kv;
    std::size_t pos = 0;
    while (kv.count("DataOffsetBytes") == 0) {
        const std::size_t eol = bytes.find('\n', pos);
        if (eol == std::string::npos) malformed("no DataOffsetBytes line in " + path.string());
        const std::string line = bytes.substr(pos, eol - pos);
        pos = eol + 1;
        const std::size_t sep = line.find(" = ");
        if (sep == std::string::npos) malformed("expected 'Key = Value': '" + line + "'");
        const std::string key = line.substr(0, sep);
        bool known = false;
        for (const char* k : kKeys) known = known || key == k;
        if (!known) malformed("unknown key '" + key + "'");
        if (kv.count(key)) malformed("duplicate key '" + key + "'");
        kv[key] = line.substr(sep + 3);
    }
    for (const char* k : kKeys) {
        if (!kv.count(k)) malformed(std::string("missing key '") + k + "'");
    }

    ParsedHeader h;
    h.object_type = kv["ObjectType"];
    h.element_type = kv["ElementType"];
    if (kv["NDims"] != "3") malformed("NDims must be 3");
    if (std::sscanf(kv["DimSize"].c_str(), "%d %d %d", &h.grid.dims[0], &h.grid.dims[1], &h.grid.dims[2]) != 3)
        malformed("DimSize needs three integers");
    if (std::sscanf(kv["ElementSpacing"].c_str(), "%lf %lf %lf", &h.grid.spacing[0], &h.grid.spacing[1],
                    &h.grid.spacing[2]) != 3)
        malformed("ElementSpacing needs three numbers");
    if (std::sscanf(kv["Offset"].c_str(), "%lf %lf %lf", &h.grid.origin[0], &h.grid.origin[1],
                    &h.grid.origin[2]) != 3)
        malformed("Offset needs three numbers");
    if (std::sscanf(kv["Channels"].c_str(), "%d", &h.channels) != 1) malformed("Channels needs an integer");
    std::uintmax_t off = 0;
    if (std::sscanf(kv["DataOffsetBytes"].c_str(), "%" SCNuMAX, &off) != 1)
        malformed("DataOffsetBytes needs an integer");
    h.data_offset = static_cast<std::size_t>(off);
    if (h.data_offset != pos) malformed("DataOffsetBytes does not match the header length");
    h.grid.validate("read_volume");
    return h;
}

} // namespace

void write_volume(const std::filesystem::path& path, const Volume3& vol) {
    const std::vector<float> payload = to_f32(vol.data);
    write_file(path, "Image", vol.grid, "FLOAT32", 1, payload.data(), payload.size() * sizeof(float));
}

void write_volume(const std::filesystem::path& path, const DisplacementField3& field) {
    const std::vector<float> payload = to_f32(field.data);
    write_file(path, "VectorField", field.grid, "FLOAT32", 3, payload.data(), payload.size() * sizeof(float));
}

void write_volume(const std::filesystem::path& path, const LabelMap3& labels) {
    write_file(path, "LabelMap", labels.grid, "UINT8", 1, labels.data.data(), labels.data.size());
}

void write_volume(const std::filesystem::path& path, const AnyVolume& any) {
    std::visit([&](const auto& v) { write_volume(path, v); }, any);
}

AnyVolume read_volume(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoError::Kind::FileAccess, "cannot open: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();

    const ParsedHeader h = parse_header(bytes, path);

    std::size_t elem_size = 0;
    if (h.element_type == "FLOAT32") {
        elem_size = 4;
    } else if (h.element_type == "UINT8") {
        elem_size = 1;
    } else {
        throw IoError(IoError::Kind::UnknownElementType, "unknown ElementType '" + h.element_type + "'");
    }

    const bool schema_ok = (h.object_type == "Image" && h.channels == 1 && h.element_type == "FLOAT32") ||
                           (h.object_type == "VectorField" && h.channels == 3 && h.element_type == "FLOAT32") ||
                           (h.object_type == "LabelMap" && h.channels == 1 && h.element_type == "UINT8");
    if (!schema_ok)
        throw IoError(IoError::Kind::SchemaViolation,
                      "invalid ObjectType/ElementType/Channels combination: " + h.object_type + "/" +
                          h.element_type + "/" + std::to_string(h.channels));

    const std::size_t expected = h.grid.voxel_count() * static_cast<std::size_t>(h.channels) * elem_size;
    const std::size_t actual = bytes.size() - h.data_offset;
    if (actual != expected)
        throw IoError(IoError::Kind::TruncatedPayload, "payload size mismatch: expected " +
                                                           std::to_string(expected) + " bytes, found " +
                                                           std::to_string(actual));
    const char* payload = bytes.data() + h.data_offset;

    if (h.object_type == "LabelMap") {
        LabelMap3 labels(h.grid);
        std::memcpy(labels.data.data(), payload, expected);
        return labels;
    }
    std::vector<float> f32(h.grid.voxel_count() * static_cast<std::size_t>(h.channels));
    std::memcpy(f32.data(), payload, expected);
    for (float v : f32) {
        if (!std::isfinite(v))
            throw IoError(IoError::Kind::SchemaViolation, "non-finite value in payload of " + path.string());
    }
    if (h.object_type == "Image") {
        Volume3 vol(h.grid);
        for (std::size_t i = 0; i < f32.size(); ++i) vol.data[i] = f32[i];
        return vol;
    }
    DisplacementField3 field(h.grid);
    for (std::size_t i = 0; i < f32.size(); ++i) field.data[i] = f32[i];
    return field;
}

Volume3 read_image(const std::filesystem::path& path) {
    AnyVolume any = read_volume(path);
    if (auto* v = std::get_if<Volume3>(&any)) return std::move(*v);
    throw IoError(IoError::Kind::SchemaViolation, "expected an Image file: " + path.string());
}

DisplacementField3 read_field(const std::filesystem::path& path) {
    AnyVolume any = read_volume(path);
    if (auto* v = std::get_if<DisplacementField3>(&any)) return std::move(*v);
    throw IoError(IoError::Kind::SchemaViolation, "expected a VectorField file: " + path.string());
}

LabelMap3 read_labels(const std::filesystem::path& path) {
    AnyVolume any = read_volume(path);
    if (auto* v = std::get_if<LabelMap3>(&any)) return std::move(*v);
    throw IoError(IoError::Kind::SchemaViolation, "expected a LabelMap file: " + path.string());
}

} // namespace cardiomech
