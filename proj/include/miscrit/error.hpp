#pragma once

#include <stdexcept>
#include <string>

namespace miscrit {

enum class ErrorCode {
    invalid_argument,
    nonfinite_link,
    design_rank,
    dispersion_undefined,
    dispersion_degenerate,
    model_degenerate,
    decomposition_undefined,
    domain,
    too_many_predictors,
    selection_impossible,
    input,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::nonfinite_link: return "nonfinite-link";
    case ErrorCode::design_rank: return "design-rank";
    case ErrorCode::dispersion_undefined: return "dispersion-undefined";
    case ErrorCode::dispersion_degenerate: return "dispersion-degenerate";
    case ErrorCode::model_degenerate: return "model-degenerate";
    case ErrorCode::decomposition_undefined: return "decomposition-undefined";
    case ErrorCode::domain: return "domain";
    case ErrorCode::too_many_predictors: return "too-many-predictors";
    case ErrorCode::selection_impossible: return "selection-impossible";
    case ErrorCode::input: return "input";
    }
    return "unknown";
}

/// Usage and data-validation failures, as opposed to numerical/model failures.
inline bool is_input_error(ErrorCode code) {
    return code == ErrorCode::invalid_argument || code == ErrorCode::domain ||
           code == ErrorCode::too_many_predictors || code == ErrorCode::input;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace miscrit
