#pragma once

#include <stdexcept>
#include <string>

namespace catsim {

enum class ErrorKind {
    pool_mismatch,        // prediction/evidence pool differs from the model pool
    empty_input,
    budget,               // session budget exceeds the pool size
    contract_violation,   // session invariant broken (repeat absorb, bad selection)
    parse,
    shape,
    duplicate,
    infeasible_split,
    spec,                 // invalid generator / model spec
    domain,               // argument outside the mathematical domain
    calibration,
    selection,
    coverage,             // skill map does not cover the question pool
    impossible_evidence,
    size,                 // expansion guard tripped
    state,                // required fitted state missing
    config,
    io,
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::pool_mismatch: return "pool_mismatch";
        case ErrorKind::empty_input: return "empty_input";
        case ErrorKind::budget: return "budget";
        case ErrorKind::contract_violation: return "contract_violation";
        case ErrorKind::parse: return "parse";
        case ErrorKind::shape: return "shape";
        case ErrorKind::duplicate: return "duplicate";
        case ErrorKind::infeasible_split: return "infeasible_split";
        case ErrorKind::spec: return "spec";
        case ErrorKind::domain: return "domain";
        case ErrorKind::calibration: return "calibration";
        case ErrorKind::selection: return "selection";
        case ErrorKind::coverage: return "coverage";
        case ErrorKind::impossible_evidence: return "impossible_evidence";
        case ErrorKind::size: return "size";
        case ErrorKind::state: return "state";
        case ErrorKind::config: return "config";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
          kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

} // namespace catsim
