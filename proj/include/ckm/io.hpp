#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ckm/environment.hpp"
#include "ckm/grid.hpp"
#include "ckm/propagation.hpp"

namespace ckm {

using json = nlohmann::json;

/// Missing, unreadable or malformed files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kContainerMagic = "CKMGRID1";
inline constexpr int kFormatVersion = 1;

/// Container bytes: magic, uint32 LE header length, JSON header, LE payload.
std::string encode_map(const GridMap& map, const json& extra = json::object());
std::string encode_mask(const BinaryMask& mask, const MapMeta& meta, const json& extra = json::object());
std::string encode_environment(const Environment& env);

struct DecodedMap {
    GridMap map;
    json header;
};
struct DecodedMask {
    BinaryMask mask;
    json header;
};

DecodedMap decode_map(std::string_view bytes);
DecodedMask decode_mask(std::string_view bytes);
Environment decode_environment(std::string_view bytes);

/// Atomic write (temporary file + rename).
void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

void write_map(const std::filesystem::path& path, const GridMap& map, const json& extra = json::object());
DecodedMap read_map(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask, const MapMeta& meta = {});
DecodedMask read_mask(const std::filesystem::path& path);
void write_environment(const std::filesystem::path& path, const Environment& env);
Environment read_environment(const std::filesystem::path& path);

json env_config_to_json(const EnvConfig& cfg);
EnvConfig env_config_from_json(const json& j);
json channel_to_json(const ChannelParams& p);
ChannelParams channel_from_json(const json& j);

std::string_view units_of(MapKind kind);

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace ckm
