#pragma once

#include <stdexcept>
#include <string>

namespace qcs {

// Base class for all library errors. Subclasses exist where callers need to
// distinguish failure classes (input validation vs. runtime execution).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid field values at instruction encode time.
struct EncodingError : Error {
    using Error::Error;
};

// Malformed binary words or files (unknown opcode, bad magic, truncation).
struct DecodeError : Error {
    using Error::Error;
};

// Out-of-range physical quantities (frequency, amplitude).
struct RangeError : Error {
    using Error::Error;
};

// Bad configuration documents (calibration, channels, mapping) or circuit
// semantics that cannot be compiled.
struct ConfigError : Error {
    using Error::Error;
};

// Scheduling failures.
struct ScheduleError : Error {
    using Error::Error;
};

// Assembly failures (envelope overflow, unmapped destination, Nyquist).
struct AssemblyError : Error {
    using Error::Error;
};

// Emulator execution failures (pulse-late, pc out of bounds, bad sync mask).
struct EmulatorError : Error {
    using Error::Error;
};

// All cores blocked with no way to make progress.
struct DeadlockError : EmulatorError {
    using EmulatorError::EmulatorError;
};

} // namespace qcs
