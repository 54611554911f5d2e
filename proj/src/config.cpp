#include "packtree/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace packtree {

std::map<std::string, std::string> parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string value, word;
        while (ls >> word) {
            if (!value.empty()) value += ' ';
            value += word;
        }
        kv[key] = value;
    }
    return kv;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

EnvConfig env_from_config(const std::map<std::string, std::string>& kv) {
    EnvConfig cfg;
    Vec3 size{10, 10, 10};
    BinMode mode = BinMode::Discrete;
    for (const auto& [key, value] : kv) {
        if (key == "bin_x") size.x = std::stod(value);
        else if (key == "bin_y") size.y = std::stod(value);
        else if (key == "bin_z") size.z = std::stod(value);
        else if (key == "mode") {
            if (value == "discrete") mode = BinMode::Discrete;
            else if (value == "continuous") mode = BinMode::Continuous;
            else throw std::invalid_argument("mode must be discrete or continuous");
        } else if (key == "setting") cfg.setting = std::stoi(value);
        else if (key == "sampler") cfg.sampler = SamplerSpec::parse(value);
        else if (key == "scheme") cfg.scheme = scheme_from_name(value);
        else if (key == "constraint") cfg.constraint = constraint_from_name(value);
        else if (key == "constraint_weight") cfg.constraint_weight = std::stod(value);
        else if (key == "f_bar") cfg.f_bar = std::stod(value);
        else throw std::invalid_argument("unknown config key: " + key);
    }
    cfg.bin = BinSpec(size, mode);
    return cfg;
}

}  // namespace packtree
