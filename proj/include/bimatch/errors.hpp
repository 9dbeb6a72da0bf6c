#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "bimatch/class_set.hpp"

namespace bimatch {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid model construction: bad sizes, bad indices, probability vectors
// that do not validate, and the like.
struct ModelError : Error {
  using Error::Error;
};

// The compatibility graph is not connected.  Carries the connected
// components so callers can print them.
struct DisconnectedGraphError : ModelError {
  DisconnectedGraphError(std::string msg, std::vector<ClassSet> comps)
      : ModelError(std::move(msg)), components(std::move(comps)) {}
  std::vector<ClassSet> components;
};

// Independent-set enumeration exceeded the configured cap.
struct CountLimitError : Error {
  CountLimitError(std::string msg, std::size_t cap_value)
      : Error(std::move(msg)), cap(cap_value) {}
  std::size_t cap;
};

// An operation that requires a stable model was given an unstable one.
// Carries a witness set whose stability margin is non-positive.
struct UnstableModelError : Error {
  UnstableModelError(std::string msg, ClassSet witness_set, double margin)
      : Error(std::move(msg)), witness(witness_set), witness_margin(margin) {}
  ClassSet witness;
  double witness_margin;
};

// Floating-point trouble (overflow/NaN) during a recursion.
struct NumericalError : Error {
  using Error::Error;
};

// Malformed model description file.  The what() string already contains
// "file:line:" context; the fields are also exposed for programmatic use.
struct ModelParseError : Error {
  ModelParseError(std::string msg, std::string file_name, int line_number,
                  std::string field_name)
      : Error(std::move(msg)),
        file(std::move(file_name)),
        line(line_number),
        field(std::move(field_name)) {}
  std::string file;
  int line;
  std::string field;
};

}  // namespace bimatch
