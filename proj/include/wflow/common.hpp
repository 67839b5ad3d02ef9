#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wflow {

/// Error raised while reading an .inp file; carries the 1-based line number
/// when one is known (0 otherwise).
class ParseError : public std::runtime_error {
public:
    ParseError(std::string msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + std::move(msg)
                                      : std::move(msg)),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class UnknownUnit : public ParseError {
public:
    using ParseError::ParseError;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Factorization failed; row_labels name the equations implicated in the
/// rank deficiency when they could be identified.
class SingularSystem : public std::runtime_error {
public:
    SingularSystem(std::string msg, std::vector<std::string> rows = {})
        : std::runtime_error(std::move(msg)), row_labels(std::move(rows)) {}
    std::vector<std::string> row_labels;
};

class DimensionMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NewtonStall : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InfeasibleSpec : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class HeadlossFormula { HazenWilliams, DarcyWeisbach, ChezyManning };

enum class LinkStatus { Open, Active, Closed };

enum class ValveKind { GPV, PRV, FCV };

inline const char* to_string(LinkStatus s) {
    switch (s) {
        case LinkStatus::Open: return "OPEN";
        case LinkStatus::Active: return "ACTIVE";
        case LinkStatus::Closed: return "CLOSED";
    }
    return "?";
}

inline const char* to_string(ValveKind k) {
    switch (k) {
        case ValveKind::GPV: return "GPV";
        case ValveKind::PRV: return "PRV";
        case ValveKind::FCV: return "FCV";
    }
    return "?";
}

inline const char* to_string(HeadlossFormula f) {
    switch (f) {
        case HeadlossFormula::HazenWilliams: return "H-W";
        case HeadlossFormula::DarcyWeisbach: return "D-W";
        case HeadlossFormula::ChezyManning: return "C-M";
    }
    return "?";
}

}  // namespace wflow
