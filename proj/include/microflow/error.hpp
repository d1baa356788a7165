#pragma once

#include <stdexcept>
#include <string>

namespace microflow {

/// Malformed input: bad schema, violated invariant, inconsistent topology.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem or codec failure.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace microflow
