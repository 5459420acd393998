#pragma once

#include <stdexcept>
#include <string>

namespace yamabe {

/// Failure categories surfaced by the library. Each maps to a CLI exit code:
/// validation-type errors exit 2, admissibility conflicts exit 3, solver
/// failures exit 4, I/O errors exit 5.
enum class errc {
    invalid_dimension,
    invalid_parameter,
    not_a_periodic_orbit,
    integration_failure,
    oscillatory_mode,
    unexpected_elliptic_mode,
    wrong_branch,
    tail_truncation_error,
    discretization_failure,
    extend_truncation,
    index_conflict,
    out_of_range,
    degree_overflow,
    unsupported_dimension_for_fields,
    induction_violation,
    seed_too_large,
    near_resonance,
    positivity_violation,
    ball_escape,
    no_contraction,
    io_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::invalid_dimension: return "invalid-dimension";
        case errc::invalid_parameter: return "invalid-parameter";
        case errc::not_a_periodic_orbit: return "not-a-periodic-orbit";
        case errc::integration_failure: return "integration-failure";
        case errc::oscillatory_mode: return "oscillatory-mode";
        case errc::unexpected_elliptic_mode: return "unexpected-elliptic-mode";
        case errc::wrong_branch: return "wrong-branch";
        case errc::tail_truncation_error: return "tail-truncation-error";
        case errc::discretization_failure: return "discretization-failure";
        case errc::extend_truncation: return "extend-truncation";
        case errc::index_conflict: return "index-conflict";
        case errc::out_of_range: return "out-of-range";
        case errc::degree_overflow: return "degree-overflow";
        case errc::unsupported_dimension_for_fields: return "unsupported-dimension-for-fields";
        case errc::induction_violation: return "induction-violation";
        case errc::seed_too_large: return "seed-too-large";
        case errc::near_resonance: return "near-resonance";
        case errc::positivity_violation: return "positivity-violation";
        case errc::ball_escape: return "ball-escape";
        case errc::no_contraction: return "no-contraction";
        case errc::io_error: return "io-error";
    }
    return "unknown";
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

} // namespace yamabe
