#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aml5g {

enum class Errc {
    invalid_config,
    invalid_spec,
    length_mismatch,
    zero_power_signal,
    empty_input,
    sample_rate_mismatch,
    frame_too_short,
    shape_mismatch,
    class_missing,
    non_finite_loss,
    role_mismatch,
    unknown_mode,
    zero_baseline,
    parse_error,
    validation_error,
    io_error,
};

inline std::string_view errc_name(Errc c) {
    switch (c) {
        case Errc::invalid_config: return "invalid-config";
        case Errc::invalid_spec: return "invalid-spec";
        case Errc::length_mismatch: return "length-mismatch";
        case Errc::zero_power_signal: return "zero-power-signal";
        case Errc::empty_input: return "empty-input";
        case Errc::sample_rate_mismatch: return "sample-rate-mismatch";
        case Errc::frame_too_short: return "frame-too-short";
        case Errc::shape_mismatch: return "shape-mismatch";
        case Errc::class_missing: return "class-missing";
        case Errc::non_finite_loss: return "non-finite-loss";
        case Errc::role_mismatch: return "role-mismatch";
        case Errc::unknown_mode: return "unknown-mode";
        case Errc::zero_baseline: return "zero-baseline";
        case Errc::parse_error: return "parse-error";
        case Errc::validation_error: return "validation-error";
        case Errc::io_error: return "io-error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

// Validation failure that names the offending field.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(Errc::validation_error, field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

}  // namespace aml5g
