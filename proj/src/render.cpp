#include "ckm/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace ckm {

namespace {

// Coarse viridis control points.
constexpr std::array<std::array<double, 3>, 5> kViridis{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98},
                                                         {253, 231, 37}}};
constexpr std::array<std::uint8_t, 3> kTrueColor{0, 255, 0};
constexpr std::array<std::uint8_t, 3> kEstColor{255, 0, 0};

std::array<std::uint8_t, 3> colormap(std::uint8_t level) {
    const double t = level / 255.0 * (kViridis.size() - 1);
    const auto i = std::min<std::size_t>(kViridis.size() - 2, static_cast<std::size_t>(t));
    const double f = t - static_cast<double>(i);
    std::array<std::uint8_t, 3> c{};
    for (int k = 0; k < 3; ++k)
        c[k] = static_cast<std::uint8_t>(std::lround(kViridis[i][k] + f * (kViridis[i + 1][k] - kViridis[i][k])));
    return c;
}

std::string header(const char* magic, GridShape s) {
    return std::string(magic) + "\n" + std::to_string(s.cols) + " " + std::to_string(s.rows) + "\n255\n";
}

}  // namespace

std::vector<std::uint8_t> gray_levels(const GridMap& map, const NormBounds& range) {
    std::vector<std::uint8_t> out(map.size());
    const bool norm = map.kind() == MapKind::normalized;
    if (!norm) range.validate();
    for (std::size_t i = 0; i < map.size(); ++i) {
        double v = map[i];
        if (!norm) {
            const double db = map.kind() == MapKind::gain_db ? v : to_db(std::abs(v));
            v = normalize_db(db, range);
        }
        out[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
    }
    return out;
}

std::string render_pgm(const GridMap& map, const NormBounds& range) {
    const auto g = gray_levels(map, range);
    std::string out = header("P5", map.shape());
    out.append(g.begin(), g.end());
    return out;
}

std::string render_ppm(const GridMap& map, const NormBounds& range, const std::vector<Pixel>& truth,
                       const std::vector<Pixel>& estimated) {
    const GridShape s = map.shape();
    const auto g = gray_levels(map, range);
    std::vector<std::array<std::uint8_t, 3>> rgb(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) rgb[i] = colormap(g[i]);
    auto paint = [&](int x, int y, const std::array<std::uint8_t, 3>& c) {
        if (s.contains(x, y)) rgb[s.index(x, y)] = c;
    };
    for (const auto& p : truth)
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) paint(p.x + dx, p.y + dy, kTrueColor);
    for (const auto& p : estimated)
        for (int d = -2; d <= 2; ++d) {
            paint(p.x + d, p.y + d, kEstColor);
            paint(p.x + d, p.y - d, kEstColor);
        }
    std::string out = header("P6", s);
    for (const auto& c : rgb) out.append(reinterpret_cast<const char*>(c.data()), 3);
    return out;
}

json render_legend(const GridMap& map, const NormBounds& range) {
    json j;
    j["kind"] = to_string(map.kind());
    j["rows"] = map.shape().rows;
    j["cols"] = map.shape().cols;
    j["gray_mapping"] = map.kind() == MapKind::normalized ? "round(255*v)" : "round(255*clamp((dB-r_min)/(r_max-r_min)))";
    j["range_db"] = {range.r_min_db, range.r_max_db};
    j["colormap"] = "viridis";
    j["markers"] = {{"true_in", {{"shape", "dot"}, {"rgb", kTrueColor}}},
                    {"estimated_in", {{"shape", "cross"}, {"rgb", kEstColor}}}};
    return j;
}

}  // namespace ckm
