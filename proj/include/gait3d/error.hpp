#pragma once

#include <stdexcept>
#include <string>

namespace gait3d {

// Root of every exception the library throws. Each subclass names a
// category callers (and the CLI's exit-code mapping) can dispatch on.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class EmptySilhouetteError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss during training; the message names epoch and batch.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace gait3d
