#pragma once

#include <stdexcept>
#include <string>

namespace binsleuth {

// Every recoverable failure in the pipeline carries one of these codes.
// The CLI prints the code name on stderr and exits 1.
enum class Errc {
    BadMagic,
    Truncated,
    NoSectionTable,
    NoCode,
    EmptyInput,
    EmptyCode,
    TooShort,
    FragmentTooSmall,
    DomainError,
    EmptyDataset,
    DimensionMismatch,
    NonFinite,
    MalformedModel,
    UnsupportedVersion,
    MalformedManifest,
    AllFilesFailed,
    BadSpec,
    ClassMismatch,
    IoError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace binsleuth
