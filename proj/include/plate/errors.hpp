#pragma once

#include <stdexcept>
#include <string>

namespace plate {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
struct ArgumentError : Error {
  using Error::Error;
};

/// Value outside the mathematical domain of an operation
/// (degenerate box, empty ground truth, ...).
struct DomainError : Error {
  using Error::Error;
};

/// A character that cannot be mapped through the alphabet.
struct EncodingError : Error {
  using Error::Error;
};

/// Malformed text input; message carries line context where available.
struct ParseError : Error {
  using Error::Error;
};

/// Malformed binary artifact (checkpoint, image file).
struct FormatError : Error {
  using Error::Error;
};

/// Filesystem failure.
struct IoError : Error {
  using Error::Error;
};

/// Training loss blew past the divergence guard.
struct DivergenceError : Error {
  using Error::Error;
};

/// Text cannot be rasterized onto the requested canvas.
struct RenderError : Error {
  using Error::Error;
};

/// Tensor shapes inconsistent with the fixed model architecture.
struct ArchitectureError : Error {
  using Error::Error;
};

}  // namespace plate
