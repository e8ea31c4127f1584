#pragma once

#include <filesystem>
#include <variant>

#include "cardiomech/volume.hpp"

namespace cardiomech {

// Self-describing two-part file: UTF-8 "Key = Value" header lines followed by
// a little-endian raw payload at DataOffsetBytes. Scalar images and energy
// maps are FLOAT32/1-channel, displacement fields FLOAT32/3-channel
// (component-interleaved), label maps UINT8/1-channel. x-fastest ordering.
using AnyVolume = std::variant<Volume3, DisplacementField3, LabelMap3>;

AnyVolume read_volume(const std::filesystem::path& path);

void write_volume(const std::filesystem::path& path, const Volume3& vol);
void write_volume(const std::filesystem::path& path, const DisplacementField3& field);
void write_volume(const std::filesystem::path& path, const LabelMap3& labels);
void write_volume(const std::filesystem::path& path, const AnyVolume& any);

// Typed readers that fail with a schema error when the file holds another kind.
Volume3 read_image(const std::filesystem::path& path);
DisplacementField3 read_field(const std::filesystem::path& path);
LabelMap3 read_labels(const std::filesystem::path& path);

} // namespace cardiomech
