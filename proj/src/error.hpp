#pragma once

#include <stdexcept>
#include <string>

namespace sdc {

enum class ErrorKind {
    config,     // bad configuration, option out of range, unknown key
    data,       // malformed or inconsistent input data
    dimension,  // tensor/layer shape mismatch
    numeric,    // NaN/Inf or other numeric failure
    io,         // filesystem failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorKind::config, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorKind::data, msg); }
[[noreturn]] inline void throw_dimension(const std::string& msg) { throw Error(ErrorKind::dimension, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(ErrorKind::numeric, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorKind::io, msg); }

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace sdc
