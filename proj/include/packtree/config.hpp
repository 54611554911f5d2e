#pragma once

#include <map>
#include <string>

#include "packtree/env.hpp"

namespace packtree {

// Flat key-value text: one "key value" pair per line, '#' starts a comment.
std::map<std::string, std::string> load_config_file(const std::string& path);
std::map<std::string, std::string> parse_config(const std::string& text);

// Environment settings from a config map (unknown keys are rejected so typos
// surface early). Recognized keys: bin_x bin_y bin_z mode setting sampler
// scheme constraint constraint_weight f_bar.
EnvConfig env_from_config(const std::map<std::string, std::string>& kv);

}  // namespace packtree
