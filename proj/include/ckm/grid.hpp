#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ckm {

/// Floor applied before taking 10*log10 of a power value.
inline constexpr double kPowerFloorWatts = 1e-20;

struct GridShape {
    int rows = 0;  // b_L, the x axis
    int cols = 0;  // b_W, the y axis

    std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < rows && y < cols; }
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(x) * cols + y; }
    friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Integer grid coordinate q = [x, y].
struct Pixel {
    int x = 0;
    int y = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Position in meters; z is height above ground.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    friend bool operator==(const Point3&, const Point3&) = default;
};

enum class MapKind : std::uint8_t {
    rss_watts,
    signed_watts,  // extracted ISS before magnitude correction
    gain_db,
    sinr_linear,
    normalized,
};

std::string_view to_string(MapKind kind);
MapKind map_kind_from_string(std::string_view name);

struct MapMeta {
    std::uint64_t seed = 0;
    std::string scene_id;
};

/// Row-major scalar field over the scene grid.
class GridMap {
public:
    GridMap() = default;
    GridMap(GridShape shape, MapKind kind, double fill = 0.0, MapMeta meta = {});

    GridShape shape() const { return shape_; }
    MapKind kind() const { return kind_; }
    const MapMeta& meta() const { return meta_; }
    MapMeta& meta() { return meta_; }
    void set_kind(MapKind kind) { kind_ = kind; }

    double& operator()(int x, int y) { return data_[shape_.index(x, y)]; }
    double operator()(int x, int y) const { return data_[shape_.index(x, y)]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::size_t size() const { return data_.size(); }

    /// Throws std::invalid_argument when an entry violates the kind's range.
    void validate() const;

private:
    GridShape shape_{};
    MapKind kind_ = MapKind::rss_watts;
    MapMeta meta_{};
    std::vector<double> data_;
};

/// Binary matrix (sampling indicator S, negative indicator B).
class BinaryMask {
public:
    BinaryMask() = default;
    explicit BinaryMask(GridShape shape, bool fill = false);

    GridShape shape() const { return shape_; }
    bool operator()(int x, int y) const { return bits_[shape_.index(x, y)] != 0; }
    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
    void set(int x, int y, bool v) { set(shape_.index(x, y), v); }

    std::size_t count() const;
    std::span<const std::uint8_t> bytes() const { return bits_; }
    std::size_t size() const { return bits_.size(); }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    GridShape shape_{};
    std::vector<std::uint8_t> bits_;
};

inline double to_db(double watts) { return 10.0 * std::log10(watts < kPowerFloorWatts ? kPowerFloorWatts : watts); }

}  // namespace ckm
