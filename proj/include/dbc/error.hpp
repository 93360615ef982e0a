#ifndef DBC_ERROR_HPP
#define DBC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dbc {

// Bad parameters: rejected before any computation runs. CLI exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input data (malformed file, non-finite feature, ...). CLI exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dbc

#endif
