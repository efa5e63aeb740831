#pragma once

#include <stdexcept>
#include <string>

namespace adlv {

struct InsufficientPrecision : std::runtime_error {
    explicit InsufficientPrecision(const std::string& m) : std::runtime_error(m) {}
};
struct WindowOutOfRange : std::runtime_error {
    explicit WindowOutOfRange(const std::string& m) : std::runtime_error(m) {}
};
struct NotInvertible : std::runtime_error {
    explicit NotInvertible(const std::string& m) : std::runtime_error(m) {}
};
struct NotSimilitude : std::runtime_error {
    explicit NotSimilitude(const std::string& m) : std::runtime_error(m) {}
};
struct NotUnit : std::runtime_error {
    explicit NotUnit(const std::string& m) : std::runtime_error(m) {}
};
struct NotAdmissible : std::runtime_error {
    explicit NotAdmissible(const std::string& m) : std::runtime_error(m) {}
};
struct UnsupportedK : std::runtime_error {
    explicit UnsupportedK(const std::string& m) : std::runtime_error(m) {}
};
struct ShapeViolation : std::runtime_error {
    explicit ShapeViolation(const std::string& m) : std::runtime_error(m) {}
};
struct NoProgress : std::runtime_error {
    explicit NoProgress(const std::string& m) : std::runtime_error(m) {}
};
struct PrecisionExhausted : std::runtime_error {
    explicit PrecisionExhausted(const std::string& m) : std::runtime_error(m) {}
};
struct PreconditionViolated : std::runtime_error {
    explicit PreconditionViolated(const std::string& m) : std::runtime_error(m) {}
};
struct PivotCollapse : std::runtime_error {
    explicit PivotCollapse(const std::string& m) : std::runtime_error(m) {}
};
struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(const std::string& m) : std::runtime_error(m) {}
};
struct SingularQ : std::runtime_error {
    explicit SingularQ(const std::string& m) : std::runtime_error(m) {}
};
struct LiftFailed : std::runtime_error {
    explicit LiftFailed(const std::string& m) : std::runtime_error(m) {}
};
struct ConfigInvalid : std::runtime_error {
    explicit ConfigInvalid(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace adlv
