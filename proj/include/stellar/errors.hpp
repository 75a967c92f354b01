#ifndef STELLAR_ERRORS_HPP
#define STELLAR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stellar {

/// Base class for all errors raised by the library. `kind()` carries a
/// stable machine-readable tag naming the violated invariant; the message
/// adds the offending values.
class StellarError : public std::runtime_error {
public:
    StellarError(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define STELLAR_DEFINE_ERROR(NAME)                                        \
    class NAME : public StellarError {                                     \
    public:                                                                \
        explicit NAME(const std::string& message)                          \
            : StellarError(#NAME, message) {}                              \
    }

STELLAR_DEFINE_ERROR(ParseError);
STELLAR_DEFINE_ERROR(UndeclaredAtom);
STELLAR_DEFINE_ERROR(EmptyResult);
STELLAR_DEFINE_ERROR(NotSubsetClosed);
STELLAR_DEFINE_ERROR(SelfMembership);
STELLAR_DEFINE_ERROR(NotAdditive);
STELLAR_DEFINE_ERROR(BadApex);
STELLAR_DEFINE_ERROR(VertexClash);
STELLAR_DEFINE_ERROR(BadIota);
STELLAR_DEFINE_ERROR(DomainMismatch);
STELLAR_DEFINE_ERROR(SideConditionFailed);
STELLAR_DEFINE_ERROR(PreconditionFailed);
STELLAR_DEFINE_ERROR(UnsupportedProvenance);
STELLAR_DEFINE_ERROR(ScheduleInvalid);
STELLAR_DEFINE_ERROR(DimensionTooHigh);
STELLAR_DEFINE_ERROR(ValidationError);
STELLAR_DEFINE_ERROR(GuardrailExceeded);
STELLAR_DEFINE_ERROR(InternalCheckFailed);

#undef STELLAR_DEFINE_ERROR

} // namespace stellar

#endif
