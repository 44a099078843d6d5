#pragma once

#include <stdexcept>
#include <string>

namespace ssv {

/// Raised when a drift/diffusion/path evaluation produces a non-finite value,
/// typically exp(v) for extreme log-variance. The message names the offending
/// component and, for paths, the path/bar/substep where it happened.
class overflow_error : public std::runtime_error {
public:
    explicit overflow_error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised by closed-form moment evaluation when the parameter point lies within
/// relative tolerance 1e-6 of a singular denominator surface (e.g. gamma_v = 2*lambda_s).
/// Callers are expected to fall back to the ODE oracle, which is regular everywhere.
class resonance_error : public std::runtime_error {
public:
    explicit resonance_error(const std::string& denominator)
        : std::runtime_error("moment closed form is singular near " + denominator +
                             " = 0; use the ODE oracle at this parameter point"),
          denominator_(denominator) {}

    const std::string& denominator() const noexcept { return denominator_; }

private:
    std::string denominator_;
};

/// Malformed input data: bad CSV/JSON rows, inconsistent grids, unknown labels.
/// Messages carry row/field-level diagnostics where available.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration or parameter values (violated invariants).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// A sample with zero spread (or otherwise degenerate) where a scale is required,
/// e.g. bandwidth selection on constant endpoints or a correlation at t = 0.
class degenerate_sample_error : public std::runtime_error {
public:
    explicit degenerate_sample_error(const std::string& what) : std::runtime_error(what) {}
};

/// Two independent evaluations of the same quantity disagreed beyond numerical
/// tolerance. This is a logic error (a transcription or derivation bug), not a
/// usage error, hence the std::logic_error base.
class consistency_error : public std::logic_error {
public:
    explicit consistency_error(const std::string& what) : std::logic_error(what) {}
};

}  // namespace ssv
