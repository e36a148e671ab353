// Exception types shared across the library. Categories map onto the CLI
// exit-code contract: config (1), data (2), numeric (3).
#pragma once

#include <stdexcept>
#include <string>

namespace laplearn {

enum class ErrorCategory { Config = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
public:
    Error(std::string msg, ErrorCategory cat)
        : std::runtime_error(std::move(msg)), category_(cat) {}
    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define LAPLEARN_DEFINE_ERROR(Name, Cat)                          \
    class Name : public Error {                                   \
    public:                                                       \
        explicit Name(const std::string& msg)                     \
            : Error(std::string(#Name) + ": " + msg, Cat) {}      \
    }

LAPLEARN_DEFINE_ERROR(ConfigError, ErrorCategory::Config);
LAPLEARN_DEFINE_ERROR(ParameterOutOfRange, ErrorCategory::Config);

LAPLEARN_DEFINE_ERROR(ParseError, ErrorCategory::Data);
LAPLEARN_DEFINE_ERROR(NonSquare, ErrorCategory::Data);
LAPLEARN_DEFINE_ERROR(AsymmetricBeyondTolerance, ErrorCategory::Data);
LAPLEARN_DEFINE_ERROR(DimensionMismatch, ErrorCategory::Data);
LAPLEARN_DEFINE_ERROR(IndexOutOfRange, ErrorCategory::Data);
LAPLEARN_DEFINE_ERROR(EmptyInput, ErrorCategory::Data);
LAPLEARN_DEFINE_ERROR(IoError, ErrorCategory::Data);

LAPLEARN_DEFINE_ERROR(NotPositiveDefinite, ErrorCategory::Numeric);
LAPLEARN_DEFINE_ERROR(NotHermitian, ErrorCategory::Numeric);
LAPLEARN_DEFINE_ERROR(DimensionOverflow, ErrorCategory::Numeric);
LAPLEARN_DEFINE_ERROR(UnstableProcess, ErrorCategory::Numeric);
LAPLEARN_DEFINE_ERROR(SingularARPolynomial, ErrorCategory::Numeric);
LAPLEARN_DEFINE_ERROR(BandwidthTooLarge, ErrorCategory::Numeric);
LAPLEARN_DEFINE_ERROR(BadProblem, ErrorCategory::Numeric);
LAPLEARN_DEFINE_ERROR(SingularSubHessian, ErrorCategory::Numeric);

#undef LAPLEARN_DEFINE_ERROR

}  // namespace laplearn
