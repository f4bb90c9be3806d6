#include "tepinn/error.hpp"

namespace tepinn {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::ZeroNorm: return "ZeroNorm";
        case ErrorKind::NonZeroYaw: return "NonZeroYaw";
        case ErrorKind::SingularInertia: return "SingularInertia";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::UnknownProfile: return "UnknownProfile";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Parse: return "Parse";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::NonScalarLoss: return "NonScalarLoss";
        case ErrorKind::WrongWindowLength: return "WrongWindowLength";
        case ErrorKind::OddModelDim: return "OddModelDim";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::TooShort: return "TooShort";
        case ErrorKind::NanLoss: return "NanLoss";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::VersionMismatch: return "VersionMismatch";
    }
    return "Unknown";
}

}  // namespace tepinn
