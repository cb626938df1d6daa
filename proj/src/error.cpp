#include "binsleuth/error.hpp"

namespace binsleuth {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::BadMagic: return "BadMagic";
        case Errc::Truncated: return "Truncated";
        case Errc::NoSectionTable: return "NoSectionTable";
        case Errc::NoCode: return "NoCode";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::EmptyCode: return "EmptyCode";
        case Errc::TooShort: return "TooShort";
        case Errc::FragmentTooSmall: return "FragmentTooSmall";
        case Errc::DomainError: return "DomainError";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::NonFinite: return "NonFinite";
        case Errc::MalformedModel: return "MalformedModel";
        case Errc::UnsupportedVersion: return "UnsupportedVersion";
        case Errc::MalformedManifest: return "MalformedManifest";
        case Errc::AllFilesFailed: return "AllFilesFailed";
        case Errc::BadSpec: return "BadSpec";
        case Errc::ClassMismatch: return "ClassMismatch";
        case Errc::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace binsleuth
