#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace tabsim {

enum class ErrorCode {
    invalid_config,    // bad parameter or config file content
    precondition,      // operation called outside its domain
    infeasible,        // requested operating point cannot be reached
    non_convergent,    // iterative solver gave up
    diverged,          // simulation state blew up
    io                 // file could not be read or written
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    Error(ErrorCode code, std::string message, double limit_w)
        : std::runtime_error(std::move(message)), code_(code), limit_w_(limit_w) {}

    ErrorCode code() const { return code_; }

    // For infeasible power requests: the maximum transferable power in watts.
    std::optional<double> limit_watts() const { return limit_w_; }

private:
    ErrorCode code_;
    std::optional<double> limit_w_;
};

[[noreturn]] inline void throw_config(std::string msg) {
    throw Error(ErrorCode::invalid_config, std::move(msg));
}

[[noreturn]] inline void throw_precondition(std::string msg) {
    throw Error(ErrorCode::precondition, std::move(msg));
}

}  // namespace tabsim
