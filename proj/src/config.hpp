#pragma once

#include <string>

#include <json.hpp>

#include "simulator.hpp"

namespace tabsim {

// A fully resolved experiment configuration: every default filled in, so any
// report embedding it reproduces the run exactly. Serialization is stable
// (sorted keys, shortest round-trip numbers).
class Config {
public:
    const nlohmann::json& resolved() const { return resolved_; }
    std::string text() const;  // stable JSON dump
    std::string hash() const;  // fnv1a64 of text()

    ConverterSpec converter() const;
    SimConfig sim() const;

    // Port voltages used by the analytic power-flow layer; v3 is the nominal
    // consuming-port voltage.
    std::array<double, 3> nominal_port_voltages() const;
    std::array<double, 3> link_coefficients_w_per_rad() const;

    void set_number(const std::string& dotted_key, double value);

    static Config preset(const std::string& name);
    static Config from_json_text(const std::string& text);
    static Config from_file(const std::string& path);

private:
    explicit Config(nlohmann::json resolved);
    nlohmann::json resolved_;
};

}  // namespace tabsim
