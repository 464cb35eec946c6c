#ifndef LOADCAST_ERROR_HPP
#define LOADCAST_ERROR_HPP

#include <stdexcept>
#include <string>

namespace loadcast {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files (catalog, datasets, checkpoints).
struct ParseError : Error {
    using Error::Error;
};

// Structurally valid input violating a domain invariant.
struct ValidationError : Error {
    using Error::Error;
};

// Node or time budget exhausted before an exact answer was proven.
struct BudgetError : Error {
    using Error::Error;
};

}  // namespace loadcast

#endif
