#pragma once

#include <stdexcept>
#include <string>

namespace flsim {

// Base of every error raised by the library. Callers that only care about
// "something in the emulator failed" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define FLSIM_DEFINE_ERROR(Name)        \
    class Name : public Error {         \
    public:                             \
        using Error::Error;             \
    }

FLSIM_DEFINE_ERROR(OutOfRange);
FLSIM_DEFINE_ERROR(NonFiniteInput);

}  // namespace flsim
