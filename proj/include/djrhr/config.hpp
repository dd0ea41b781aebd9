#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace djrhr {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat UTF-8 "key = value" lines; '#' starts a comment; blank lines ignored.
std::map<std::string, std::string> parse_config_file(const std::string& path);
std::map<std::string, std::string> parse_config_text(const std::string& text);

}  // namespace djrhr
