#include "ckm/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ckm {

namespace fs = std::filesystem;

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view s, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}

void put_f32(std::string& out, float f) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
    put_u32(out, bits);
}

float get_f32(std::string_view s, std::size_t off) { return std::bit_cast<float>(get_u32(s, off)); }

std::string frame(const json& header, std::string_view payload) {
    const std::string h = header.dump();
    std::string out;
    out.reserve(kContainerMagic.size() + 4 + h.size() + payload.size());
    out.append(kContainerMagic);
    put_u32(out, static_cast<std::uint32_t>(h.size()));
    out.append(h);
    out.append(payload);
    return out;
}

struct Frame {
    json header;
    std::string_view payload;
};

Frame unframe(std::string_view bytes) {
    const std::size_t m = kContainerMagic.size();
    if (bytes.size() < m + 4 || bytes.substr(0, m) != kContainerMagic) throw IoError("not a ckm container (bad magic)");
    const std::uint32_t len = get_u32(bytes, m);
    if (bytes.size() < m + 4 + len) throw IoError("truncated container header");
    Frame f;
    try {
        f.header = json::parse(bytes.substr(m + 4, len));
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed container header: ") + e.what());
    }
    if (!f.header.is_object() || f.header.value("format", "") != "ckm-grid")
        throw IoError("container header is not a ckm-grid header");
    if (f.header.value("version", 0) != kFormatVersion)
        throw IoError("unsupported container version " + f.header.value("version", json(0)).dump());
    f.payload = bytes.substr(m + 4 + len);
    return f;
}

json base_header(std::string_view kind, std::string_view dtype, GridShape shape, std::string_view units,
                 const MapMeta& meta) {
    json h = json::object();
    h["format"] = "ckm-grid";
    h["version"] = kFormatVersion;
    h["kind"] = kind;
    h["dtype"] = dtype;
    h["rows"] = shape.rows;
    h["cols"] = shape.cols;
    h["units"] = units;
    h["scene_id"] = meta.scene_id;
    h["seed"] = meta.seed;
    return h;
}

GridShape header_shape(const json& h) {
    try {
        const GridShape s{h.at("rows").get<int>(), h.at("cols").get<int>()};
        if (s.rows <= 0 || s.cols <= 0) throw IoError("container has non-positive dimensions");
        return s;
    } catch (const json::exception& e) {
        throw IoError(std::string("container header missing dimensions: ") + e.what());
    }
}

MapMeta header_meta(const json& h) { return {h.value("seed", std::uint64_t{0}), h.value("scene_id", std::string{})}; }

void merge_extra(json& h, const json& extra) {
    if (!extra.is_object()) throw std::invalid_argument("container extras must be a JSON object");
    for (const auto& [k, v] : extra.items())
        if (!h.contains(k)) h[k] = v;
}

}  // namespace

std::string_view units_of(MapKind kind) {
    switch (kind) {
        case MapKind::rss_watts:
        case MapKind::signed_watts: return "W";
        case MapKind::gain_db: return "dB";
        case MapKind::sinr_linear: return "linear";
        case MapKind::normalized: return "normalized";
    }
    return "";
}

std::string encode_map(const GridMap& map, const json& extra) {
    json h = base_header(to_string(map.kind()), "float32", map.shape(), units_of(map.kind()), map.meta());
    merge_extra(h, extra);
    std::string payload;
    payload.reserve(map.size() * 4);
    for (double v : map.data()) put_f32(payload, static_cast<float>(v));
    return frame(h, payload);
}

DecodedMap decode_map(std::string_view bytes) {
    Frame f = unframe(bytes);
    if (f.header.value("dtype", "") != "float32") throw IoError("map container must hold float32 data");
    const GridShape shape = header_shape(f.header);
    if (f.payload.size() != shape.size() * 4) throw IoError("map payload size does not match its dimensions");
    MapKind kind;
    try {
        kind = map_kind_from_string(f.header.at("kind").get<std::string>());
    } catch (const std::exception& e) {
        throw IoError(std::string("map header has an invalid kind: ") + e.what());
    }
    DecodedMap out{GridMap(shape, kind, 0.0, header_meta(f.header)), f.header};
    for (std::size_t i = 0; i < shape.size(); ++i) out.map[i] = get_f32(f.payload, 4 * i);
    return out;
}

std::string encode_mask(const BinaryMask& mask, const MapMeta& meta, const json& extra) {
    json h = base_header("mask", "uint8", mask.shape(), "binary", meta);
    merge_extra(h, extra);
    const auto b = mask.bytes();
    return frame(h, std::string_view(reinterpret_cast<const char*>(b.data()), b.size()));
}

DecodedMask decode_mask(std::string_view bytes) {
    Frame f = unframe(bytes);
    if (f.header.value("dtype", "") != "uint8") throw IoError("mask container must hold uint8 data");
    const GridShape shape = header_shape(f.header);
    if (f.payload.size() != shape.size()) throw IoError("mask payload size does not match its dimensions");
    DecodedMask out{BinaryMask(shape), f.header};
    for (std::size_t i = 0; i < shape.size(); ++i) {
        const auto v = static_cast<unsigned char>(f.payload[i]);
        if (v > 1) throw IoError("mask payload holds a non-binary value");
        out.mask.set(i, v == 1);
    }
    return out;
}

json env_config_to_json(const EnvConfig& c) {
    return {{"length_m", c.length_m},
            {"width_m", c.width_m},
            {"max_height_m", c.max_height_m},
            {"resolution_m", c.resolution_m},
            {"built_ratio", c.built_ratio},
            {"buildings_per_km2", c.buildings_per_km2},
            {"rayleigh_mean_height_m", c.rayleigh_mean_height_m},
            {"uav_altitude_m", c.uav_altitude_m},
            {"gbs_height_m", c.gbs_height_m},
            {"seed", c.seed},
            {"min_side_px", c.min_side_px},
            {"max_side_px", c.max_side_px},
            {"ratio_tolerance", c.ratio_tolerance},
            {"max_attempts", c.max_attempts},
            {"strict_ratio", c.strict_ratio}};
}

EnvConfig env_config_from_json(const json& j) {
    EnvConfig c;
    c.length_m = j.value("length_m", c.length_m);
    c.width_m = j.value("width_m", c.width_m);
    c.max_height_m = j.value("max_height_m", c.max_height_m);
    c.resolution_m = j.value("resolution_m", c.resolution_m);
    c.built_ratio = j.value("built_ratio", c.built_ratio);
    c.buildings_per_km2 = j.value("buildings_per_km2", c.buildings_per_km2);
    c.rayleigh_mean_height_m = j.value("rayleigh_mean_height_m", c.rayleigh_mean_height_m);
    c.uav_altitude_m = j.value("uav_altitude_m", c.uav_altitude_m);
    c.gbs_height_m = j.value("gbs_height_m", c.gbs_height_m);
    c.seed = j.value("seed", c.seed);
    c.min_side_px = j.value("min_side_px", c.min_side_px);
    c.max_side_px = j.value("max_side_px", c.max_side_px);
    c.ratio_tolerance = j.value("ratio_tolerance", c.ratio_tolerance);
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.strict_ratio = j.value("strict_ratio", c.strict_ratio);
    return c;
}

json channel_to_json(const ChannelParams& p) {
    return {{"alpha_los", p.alpha_los},   {"beta_los", p.beta_los},         {"alpha_nlos", p.alpha_nlos},
            {"beta_nlos", p.beta_nlos},   {"sigma2_shadow", p.sigma2_shadow}, {"sigma2_fade", p.sigma2_fade}};
}

ChannelParams channel_from_json(const json& j) {
    ChannelParams p;
    p.alpha_los = j.value("alpha_los", p.alpha_los);
    p.beta_los = j.value("beta_los", p.beta_los);
    p.alpha_nlos = j.value("alpha_nlos", p.alpha_nlos);
    p.beta_nlos = j.value("beta_nlos", p.beta_nlos);
    p.sigma2_shadow = j.value("sigma2_shadow", p.sigma2_shadow);
    p.sigma2_fade = j.value("sigma2_fade", p.sigma2_fade);
    return p;
}

std::string encode_environment(const Environment& env) {
    json h = base_header("environment", "float32", env.shape(), "m", {env.config().seed, ""});
    h["config"] = env_config_to_json(env.config());
    h["ratio_converged"] = env.ratio_converged();
    h["built_ratio_realized"] = env.built_ratio();
    json fps = json::array();
    for (const auto& f : env.footprints()) fps.push_back({f.x0, f.y0, f.w, f.h, f.height_m});
    h["footprints"] = fps;
    std::string payload;
    payload.reserve(env.heights().size() * 4);
    for (float v : env.heights()) put_f32(payload, v);
    return frame(h, payload);
}

Environment decode_environment(std::string_view bytes) {
    Frame f = unframe(bytes);
    if (f.header.value("kind", "") != "environment") throw IoError("container is not an environment");
    const GridShape shape = header_shape(f.header);
    if (f.payload.size() != shape.size() * 4) throw IoError("environment payload size does not match its dimensions");
    try {
        EnvConfig cfg = env_config_from_json(f.header.at("config"));
        if (cfg.grid() != shape) throw IoError("environment config does not match the stored grid");
        std::vector<Footprint> fps;
        for (const auto& a : f.header.at("footprints"))
            fps.push_back({a.at(0).get<int>(), a.at(1).get<int>(), a.at(2).get<int>(), a.at(3).get<int>(),
                           a.at(4).get<float>()});
        std::vector<float> h(shape.size());
        for (std::size_t i = 0; i < shape.size(); ++i) h[i] = get_f32(f.payload, 4 * i);
        Environment env(cfg, std::move(fps), std::move(h));
        env.set_ratio_converged(f.header.value("ratio_converged", true));
        return env;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed environment header: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw IoError(std::string("invalid environment: ") + e.what());
    }
}

void write_file(const fs::path& path, std::string_view bytes) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_map(const fs::path& path, const GridMap& map, const json& extra) { write_file(path, encode_map(map, extra)); }

DecodedMap read_map(const fs::path& path) {
    try {
        return decode_map(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_mask(const fs::path& path, const BinaryMask& mask, const MapMeta& meta) {
    write_file(path, encode_mask(mask, meta));
}

DecodedMask read_mask(const fs::path& path) {
    try {
        return decode_mask(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_environment(const fs::path& path, const Environment& env) { write_file(path, encode_environment(env)); }

Environment read_environment(const fs::path& path) {
    try {
        return decode_environment(read_file(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

}  // namespace ckm
