#ifndef PERFKIT_ERROR_HPP
#define PERFKIT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace perfkit {

// Bad input content: malformed files, violated preconditions, incompatible grids.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem failures: missing files, unwritable directories, short reads.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace perfkit

#endif // PERFKIT_ERROR_HPP
