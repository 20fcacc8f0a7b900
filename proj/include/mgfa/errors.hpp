#pragma once

#include <stdexcept>
#include <string>

namespace mgfa {

// Base class for everything thrown by this library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor/layer shape mismatches. Messages name the offending dimensions.
struct shape_error : error {
  using error::error;
};

// Invalid configuration values, unknown keys, malformed annotation or
// record lines. CLI exit code 2.
struct config_error : error {
  using error::error;
};

// File system and serialization problems. CLI exit code 3.
struct io_error : error {
  using error::error;
};

// Unrecognized magic bytes in a binary file.
struct bad_magic_error : io_error {
  using io_error::io_error;
};

// Recognized file, unsupported format version.
struct version_error : io_error {
  using io_error::io_error;
};

// File ends before the declared payload does.
struct truncated_error : io_error {
  using io_error::io_error;
};

// Structurally invalid payload (bad dimensions, unsupported maxval, ...).
struct format_error : io_error {
  using io_error::io_error;
};

// Non-finite values where finite ones are required (e.g. diverged training).
// CLI exit code 4.
struct numeric_error : error {
  using error::error;
};

}  // namespace mgfa
