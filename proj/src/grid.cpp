#include "ckm/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ckm {

std::string_view to_string(MapKind kind) {
    switch (kind) {
        case MapKind::rss_watts: return "rss_watts";
        case MapKind::signed_watts: return "signed_watts";
        case MapKind::gain_db: return "gain_db";
        case MapKind::sinr_linear: return "sinr_linear";
        case MapKind::normalized: return "normalized";
    }
    return "unknown";
}

MapKind map_kind_from_string(std::string_view name) {
    for (auto k : {MapKind::rss_watts, MapKind::signed_watts, MapKind::gain_db, MapKind::sinr_linear,
                   MapKind::normalized}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown map kind '" + std::string(name) + "'");
}

GridMap::GridMap(GridShape shape, MapKind kind, double fill, MapMeta meta)
    : shape_(shape), kind_(kind), meta_(std::move(meta)), data_(shape.size(), fill) {
    if (shape.rows <= 0 || shape.cols <= 0) throw std::invalid_argument("GridMap: empty shape");
}

void GridMap::validate() const {
    for (double v : data_) {
        if (!std::isfinite(v)) throw std::invalid_argument("GridMap: non-finite entry");
        switch (kind_) {
            case MapKind::rss_watts:
            case MapKind::sinr_linear:
                if (v < 0.0) throw std::invalid_argument("GridMap: negative power entry");
                break;
            case MapKind::normalized:
                if (v < 0.0 || v > 1.0) throw std::invalid_argument("GridMap: normalized entry outside [0,1]");
                break;
            default: break;
        }
    }
}

BinaryMask::BinaryMask(GridShape shape, bool fill) : shape_(shape), bits_(shape.size(), fill ? 1 : 0) {}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

}  // namespace ckm
