#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wsnod {

enum class ErrorCode {
    invalid_argument,
    io_error,
    empty_trace,
    insufficient_data,
    insufficient_history,
    no_candidates,
    degenerate_labels,
    no_oob_rows,
    config_error,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. `code()` is the machine-readable kind reported by the CLI.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace wsnod
