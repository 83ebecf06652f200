#pragma once

#include <stdexcept>
#include <string>

namespace fcp {

// Error taxonomy used across the library.  Each maps to one failure class of
// the public contracts; callers can catch the base type or a specific one.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operand shapes do not match an operation's requirements.
struct DimensionError : Error {
    using Error::Error;
};

// An API precondition unrelated to shapes was violated (non-scalar loss,
// empty list, negative values where nonnegative required, ...).
struct ContractError : Error {
    using Error::Error;
};

// Invalid run/dataset configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed file content (bad magic, truncated payload, ...).
struct FormatError : Error {
    using Error::Error;
};

// An episode is unusable, e.g. a support mask with no foreground.
struct DegenerateEpisodeError : Error {
    using Error::Error;
};

// A numerically degenerate input, e.g. a zero vector fed to cosine similarity.
struct DegenerateInputError : Error {
    using Error::Error;
};

// Episode sampling exhausted its rejection budget.
struct SamplingError : Error {
    using Error::Error;
};

// Training aborted (non-finite loss, ...).
struct TrainingError : Error {
    using Error::Error;
};

}  // namespace fcp
