#pragma once

#include <stdexcept>
#include <string>

namespace ifl {

// Invalid experiment or CLI configuration. Mapped to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable, malformed or inconsistent input data. Mapped to exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite loss. Mapped to exit code 4.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ifl
