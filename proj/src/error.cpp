#include "wsnod/error.hpp"

namespace wsnod {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::empty_trace: return "empty_trace";
        case ErrorCode::insufficient_data: return "insufficient_data";
        case ErrorCode::insufficient_history: return "insufficient_history";
        case ErrorCode::no_candidates: return "no_candidates";
        case ErrorCode::degenerate_labels: return "degenerate_labels";
        case ErrorCode::no_oob_rows: return "no_oob_rows";
        case ErrorCode::config_error: return "config_error";
    }
    return "unknown";
}

}  // namespace wsnod
