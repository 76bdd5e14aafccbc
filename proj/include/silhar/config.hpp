#pragma once

#include "silhar/error.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace silhar {

enum class BodyRatioOrientation { height_over_width, width_over_height };

// Tunables shared by the per-frame and per-interval stages. Anatomical level
// fractions are constants (see localization.hpp); everything here is a
// threshold that can be overridden from a JSON config file.
struct Config {
    int threshold = 127;                 // gray level; pixel is foreground when > threshold
    BodyRatioOrientation br_orientation = BodyRatioOrientation::height_over_width;
    double hand_threshold_mult = 1.0;    // Th_hnd = mult * std of the side boundary
    double hand_min_run_frac = 0.03;     // hand must persist over this fraction of H rows
    double leg_contact_frac = 0.05;      // leg runs must reach within this fraction of H of the base
    double head_min_rise_frac = 0.02;    // head columns must top out this far above the upper level
    int min_height_px = 8;

    int fps = 25;
    int k_override = 0;                  // 0: action interval = fps
    double mv_slow_frac = 0.05;
    double mv_rapid_frac = 0.25;
    double mdr_ratio = 2.0;              // X when horizontal range >= ratio * vertical, etc.
    double static_bmc_frac = 0.05;
    double md_deadband_frac = 0.02;
    double ha_right_deg = 95.0;
    double ha_left_deg = 85.0;

    int interval_length() const { return k_override > 0 ? k_override : fps; }

    void validate() const
    {
        auto fail = [](const std::string& msg) { throw Error(ErrorCode::validation, msg); };
        if (threshold < 0 || threshold > 255) fail("threshold must lie in [0,255]");
        if (fps < 1) fail("fps must be >= 1");
        if (k_override < 0) fail("k_override must be >= 0");
        if (interval_length() < 2) fail("action interval must span at least 2 frames");
        if (!(mv_slow_frac > 0.0 && mv_slow_frac < mv_rapid_frac)) fail("need 0 < mv_slow_frac < mv_rapid_frac");
        if (!(mdr_ratio >= 1.0)) fail("mdr_ratio must be >= 1");
        if (!(ha_left_deg < ha_right_deg)) fail("ha_left_deg must be below ha_right_deg");
        if (hand_threshold_mult < 0.0 || hand_min_run_frac <= 0.0) fail("bad hand thresholds");
        if (leg_contact_frac <= 0.0) fail("leg_contact_frac must be positive");
        if (head_min_rise_frac < 0.0 || head_min_rise_frac >= 0.13) fail("head_min_rise_frac must lie in [0, 0.13)");
        if (min_height_px < 2) fail("min_height_px must be >= 2");
    }
};

inline Config config_from_json(const nlohmann::json& j)
{
    Config c;
    if (!j.is_object())
        throw Error(ErrorCode::parse, "config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "threshold") c.threshold = value.get<int>();
            else if (key == "br_orientation") {
                const auto s = value.get<std::string>();
                if (s == "height_over_width") c.br_orientation = BodyRatioOrientation::height_over_width;
                else if (s == "width_over_height") c.br_orientation = BodyRatioOrientation::width_over_height;
                else throw Error(ErrorCode::validation, "unknown br_orientation '" + s + "'");
            }
            else if (key == "hand_threshold_mult") c.hand_threshold_mult = value.get<double>();
            else if (key == "hand_min_run_frac") c.hand_min_run_frac = value.get<double>();
            else if (key == "head_min_rise_frac") c.head_min_rise_frac = value.get<double>();
            else if (key == "leg_contact_frac") c.leg_contact_frac = value.get<double>();
            else if (key == "min_height_px") c.min_height_px = value.get<int>();
            else if (key == "fps") c.fps = value.get<int>();
            else if (key == "k_override") c.k_override = value.get<int>();
            else if (key == "mv_slow_frac") c.mv_slow_frac = value.get<double>();
            else if (key == "mv_rapid_frac") c.mv_rapid_frac = value.get<double>();
            else if (key == "mdr_ratio") c.mdr_ratio = value.get<double>();
            else if (key == "static_bmc_frac") c.static_bmc_frac = value.get<double>();
            else if (key == "md_deadband_frac") c.md_deadband_frac = value.get<double>();
            else if (key == "ha_right_deg") c.ha_right_deg = value.get<double>();
            else if (key == "ha_left_deg") c.ha_left_deg = value.get<double>();
            else throw Error(ErrorCode::validation, "unknown config key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::parse, "config key '" + key + "': " + e.what());
        }
    }
    c.validate();
    return c;
}

inline Config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::io, "cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace silhar
