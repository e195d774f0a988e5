#pragma once

#include <stdexcept>

namespace irsim {

// Circuit parameters produced an element amplitude outside (0, 1].
struct ModelValidityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A training matrix is rank-deficient or too ill-conditioned to invert.
struct IllConditionedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace irsim
