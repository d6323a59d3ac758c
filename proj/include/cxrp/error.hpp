#pragma once

#include <stdexcept>
#include <string>

namespace cxrp {

// Bad flags, bad config files, schema violations. CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or inconsistent data: files, payloads, degenerate inputs. CLI exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cxrp
