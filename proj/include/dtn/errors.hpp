#pragma once

#include <stdexcept>
#include <string>

namespace dtn {

// Base for everything thrown by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid run/file configuration supplied by the caller.
struct ConfigError : Error {
    using Error::Error;
};

// Tensor shape mismatch; message names the offending axis.
struct DimensionError : Error {
    using Error::Error;
};

// Input outside an operation's numeric domain (zero-norm row, non-finite data).
struct DegenerateInputError : Error {
    using Error::Error;
};

// All features of one class cancelled out; the episode cannot form a proxy.
struct DegenerateProxyError : Error {
    using Error::Error;
};

// Class label index outside [0, N).
struct IndexError : Error {
    using Error::Error;
};

// Violated op contract (e.g. backward from a non-scalar).
struct ContractError : Error {
    using Error::Error;
};

// Dataset cannot satisfy an episode request; message names the class.
struct SamplingError : Error {
    using Error::Error;
};

// Non-finite or otherwise unusable input data.
struct DataError : Error {
    using Error::Error;
};

// Malformed text input; message carries the line number.
struct ParseError : Error {
    using Error::Error;
};

// Checkpoint corruption or version mismatch.
struct CheckpointError : Error {
    using Error::Error;
};

// Training aborted (NaN loss, too many skipped episodes).
struct TrainingError : Error {
    using Error::Error;
};

}  // namespace dtn
