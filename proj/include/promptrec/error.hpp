#pragma once

#include <stdexcept>
#include <string>

namespace promptrec {

// Error taxonomy, mapped to CLI exit codes: ValueError -> 1, IoError -> 2,
// NumericalError -> 3.
struct ValueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : ValueError {
    using ValueError::ValueError;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace promptrec
