#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "ckm/environment.hpp"
#include "ckm/propagation.hpp"

namespace ckm::test {

/// Empty L=W=len scene at Δκ = 4 m.
inline EnvConfig flat_config(int len = 512) {
    EnvConfig c;
    c.length_m = len;
    c.width_m = len;
    c.built_ratio = 0.0;
    c.buildings_per_km2 = 0.0;
    return c;
}

inline Scene flat_scene(int len = 512) {
    Scene s;
    s.env = Environment(flat_config(len), {});
    s.q_bs = default_gbs_position(s.env);
    s.params.sigma2_shadow = 0.0;
    s.params.sigma2_fade = 0.0;
    s.seed = 1;
    s.id = "t";
    return s;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ckm_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace ckm::test
