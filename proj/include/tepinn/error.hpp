#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tepinn {

enum class ErrorKind {
    ZeroNorm,
    NonZeroYaw,
    SingularInertia,
    InvalidArgument,
    UnknownProfile,
    Io,
    Parse,
    ShapeMismatch,
    NonFinite,
    NonScalarLoss,
    WrongWindowLength,
    OddModelDim,
    LengthMismatch,
    TooShort,
    NanLoss,
    EmptyDataset,
    VersionMismatch,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` identifies the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace tepinn
