#include "config.hpp"

#include <sstream>

#include "angles.hpp"
#include "error.hpp"
#include "textio.hpp"
#include "transformer.hpp"

namespace tabsim {

using nlohmann::json;

namespace {

json ref_a_json() {
    json j;
    j["topology"] = "full_bridge";
    j["ports"] = {{"v1_v", 100.0}, {"v2_v", 100.0}, {"v3_v", 100.0}};
    j["transformer"] = {{"n1", 1.0}, {"n2", 1.0}, {"n3", 1.0},
                        {"l21_h", 1e-4}, {"l31_h", 1e-4}, {"l23_h", 1e-4}};
    // Duty is the conducted fraction of each half period; 1.0 is the gapless
    // square drive the phase-shift model assumes.
    j["switching"] = {
        {"fs_hz", 10000.0},
        {"dead_time_s", 0.0},
        {"port1", {{"mode", "square"}, {"duty", 1.0}, {"phase_rad", 0.0}}},
        {"port2", {{"mode", "square"}, {"duty", 1.0}, {"phase_rad", 0.0}}},
        {"port3", {{"mode", "square"}, {"duty", 1.0}, {"phase_rad", kPi / 4.0}}},
        {"spwm", {{"carrier_hz", 210000.0}, {"reference_hz", 10000.0},
                  {"sine_amplitude_v", 0.8}, {"triangle_amplitude_v", 1.0}}}};
    j["filter"] = {{"capacitance_f", 4.7e-4}, {"divider_capacitance_f", 0.0}};
    j["load"] = {{"resistance_ohm", 40.0}};
    j["switches"] = {{"on_resistance_ohm", 1e-3}};
    j["sim"] = {{"steps_per_period", 2000}, {"max_periods", 2000},
                {"steady_tolerance", 1e-4}, {"capture_periods", 2}};
    return j;
}

// The combined-method circuit: SPWM delivering bridges, square consuming
// bridge acting as rectifier. The comparator convention places the SPWM
// fundamental at 180 degrees, so the rectifier's operating phase is measured
// from pi. Finer step grid so each carrier period keeps 200 integration
// steps.
json combined_a_json() {
    json j = ref_a_json();
    j["switching"]["port1"]["mode"] = "spwm";
    j["switching"]["port2"]["mode"] = "spwm";
    j["switching"]["port3"]["phase_rad"] = kPi + kPi / 12.0;
    j["sim"]["steps_per_period"] = 4200;
    return j;
}

void merge_into(json& base, const json& overlay, const std::string& path) {
    if (!overlay.is_object() || !base.is_object()) {
        base = overlay;
        return;
    }
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (!base.contains(it.key()))
            throw_config("unknown config key: " + path + it.key());
        merge_into(base[it.key()], it.value(), path + it.key() + ".");
    }
}

double num(const json& j, const char* section, const char* key) {
    const json& v = j.at(section).at(key);
    if (!v.is_number())
        throw_config(std::string("config value ") + section + "." + key +
                     " must be a number");
    return v.get<double>();
}

DriveMode parse_mode(const std::string& s) {
    if (s == "square") return DriveMode::square;
    if (s == "spwm") return DriveMode::spwm;
    if (s == "off") return DriveMode::off;
    throw_config("drive mode must be square, spwm or off (got '" + s + "')");
}

}  // namespace

Config::Config(json resolved) : resolved_(std::move(resolved)) {
    // Validate eagerly and write the auto-sized divider value back so the
    // snapshot states exactly what the simulator will use.
    ConverterSpec spec = converter();
    if (spec.topology == BridgeTopology::half_bridge)
        resolved_["filter"]["divider_capacitance_f"] = spec.divider_capacitance_f;
    (void)sim();
}

std::string Config::text() const { return resolved_.dump(2) + "\n"; }

std::string Config::hash() const { return fnv1a64_hex(text()); }

ConverterSpec Config::converter() const {
    const json& j = resolved_;
    ConverterSpec spec;
    const std::string topo = j.at("topology").get<std::string>();
    if (topo == "full_bridge")
        spec.topology = BridgeTopology::full_bridge;
    else if (topo == "half_bridge")
        spec.topology = BridgeTopology::half_bridge;
    else
        throw_config("topology must be full_bridge or half_bridge");

    spec.v1_v = num(j, "ports", "v1_v");
    spec.v2_v = num(j, "ports", "v2_v");

    const json& tr = j.at("transformer");
    std::array<double, 3> turns = {tr.at("n1").get<double>(),
                                   tr.at("n2").get<double>(),
                                   tr.at("n3").get<double>()};
    std::array<double, 3> links;
    if (tr.contains("star_h")) {
        const auto star = tr.at("star_h").get<std::array<double, 3>>();
        links = delta_from_star(star);
    } else {
        links = {tr.at("l21_h").get<double>(), tr.at("l31_h").get<double>(),
                 tr.at("l23_h").get<double>()};
    }
    spec.transformer = TransformerSpec::make(turns, links);

    spec.fs_hz = num(j, "switching", "fs_hz");
    spec.dead_time_s = num(j, "switching", "dead_time_s");
    const char* port_keys[3] = {"port1", "port2", "port3"};
    for (int i = 0; i < 3; ++i) {
        const json& p = j.at("switching").at(port_keys[i]);
        BridgeDrive d;
        d.mode = parse_mode(p.at("mode").get<std::string>());
        d.duty = p.at("duty").get<double>();
        d.phase_rad = p.at("phase_rad").get<double>();
        spec.drive[static_cast<size_t>(i)] = d;
    }
    const json& sp = j.at("switching").at("spwm");
    spec.spwm = SpwmSettings{sp.at("carrier_hz").get<double>(),
                             sp.at("reference_hz").get<double>(),
                             sp.at("sine_amplitude_v").get<double>(),
                             sp.at("triangle_amplitude_v").get<double>()};

    spec.filter_capacitance_f = num(j, "filter", "capacitance_f");
    spec.divider_capacitance_f = num(j, "filter", "divider_capacitance_f");
    spec.load_resistance_ohm = num(j, "load", "resistance_ohm");
    spec.switch_on_resistance_ohm = num(j, "switches", "on_resistance_ohm");
    return ConverterSpec::validated(spec);
}

SimConfig Config::sim() const {
    const json& s = resolved_.at("sim");
    SimConfig cfg;
    cfg.steps_per_period = s.at("steps_per_period").get<int>();
    cfg.max_periods = s.at("max_periods").get<int>();
    cfg.steady_tolerance = s.at("steady_tolerance").get<double>();
    cfg.capture_periods = s.at("capture_periods").get<int>();
    return SimConfig::validated(cfg);
}

std::array<double, 3> Config::nominal_port_voltages() const {
    return {num(resolved_, "ports", "v1_v"), num(resolved_, "ports", "v2_v"),
            num(resolved_, "ports", "v3_v")};
}

std::array<double, 3> Config::link_coefficients_w_per_rad() const {
    const ConverterSpec spec = converter();
    return tabsim::link_coefficients(spec.transformer, nominal_port_voltages(),
                                     spec.fs_hz);
}

void Config::set_number(const std::string& dotted_key, double value) {
    json updated = resolved_;
    json* node = &updated;
    std::istringstream ss(dotted_key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) throw_config("empty config key");
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->contains(parts[i])) throw_config("unknown config key: " + dotted_key);
        node = &(*node)[parts[i]];
    }
    if (!node->contains(parts.back())) throw_config("unknown config key: " + dotted_key);
    (*node)[parts.back()] = value;
    // Validates the updated tree; the stored config only changes on success.
    *this = Config(std::move(updated));
}

Config Config::preset(const std::string& name) {
    if (name == "ref_a") return Config(ref_a_json());
    if (name == "combined_a") return Config(combined_a_json());
    throw_config("unknown preset '" + name + "' (have: ref_a, combined_a)");
}

Config Config::from_json_text(const std::string& text) {
    json user;
    try {
        user = json::parse(text);
    } catch (const std::exception& e) {
        throw_config(std::string("config is not valid JSON: ") + e.what());
    }
    if (!user.is_object()) throw_config("config root must be a JSON object");

    std::string base_name = "ref_a";
    if (user.contains("preset")) {
        base_name = user.at("preset").get<std::string>();
        user.erase("preset");
    }
    json base;
    if (base_name == "ref_a")
        base = ref_a_json();
    else if (base_name == "combined_a")
        base = combined_a_json();
    else
        throw_config("unknown preset '" + base_name + "'");

    // A star-form transformer replaces the delta links wholesale.
    if (user.contains("transformer") && user["transformer"].contains("star_h")) {
        const auto star = user["transformer"]["star_h"].get<std::array<double, 3>>();
        const auto links = delta_from_star(star);
        user["transformer"].erase("star_h");
        user["transformer"]["l21_h"] = links[0];
        user["transformer"]["l31_h"] = links[1];
        user["transformer"]["l23_h"] = links[2];
    }
    merge_into(base, user, "");
    return Config(std::move(base));
}

Config Config::from_file(const std::string& path) {
    return from_json_text(read_text_file(path));
}

}  // namespace tabsim
