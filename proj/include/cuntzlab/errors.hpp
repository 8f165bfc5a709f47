#ifndef CUNTZLAB_ERRORS_HPP
#define CUNTZLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cuntzlab {

// Base class for every domain error thrown by the library.  The CLI maps
// these onto its exit-code contract; tests match on the concrete type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Step-function layer.
class NotLsc : public Error {
 public:
  explicit NotLsc(const std::string& w) : Error("not lower semicontinuous: " + w) {}
};
class NotARefinement : public Error {
 public:
  explicit NotARefinement(const std::string& w) : Error("not a refinement: " + w) {}
};
class NotIncreasing : public Error {
 public:
  explicit NotIncreasing(const std::string& w) : Error("chain not increasing: " + w) {}
};

// Morphism layer.
class DomainMismatch : public Error {
 public:
  explicit DomainMismatch(const std::string& w) : Error("domain mismatch: " + w) {}
};
class UnsupportedComposition : public Error {
 public:
  explicit UnsupportedComposition(const std::string& w)
      : Error("composition not representable: " + w) {}
};

// Enumeration / verification layer.
class ResourceLimit : public Error {
 public:
  explicit ResourceLimit(const std::string& w) : Error("resource limit: " + w) {}
};
class ConditionFailed : public Error {
 public:
  explicit ConditionFailed(const std::string& w) : Error("condition failed: " + w) {}
};

// System parameters and group computations.
class InvalidParams : public Error {
 public:
  explicit InvalidParams(const std::string& w) : Error("invalid parameters: " + w) {}
};
class UnsupportedSystem : public Error {
 public:
  explicit UnsupportedSystem(const std::string& w) : Error("unsupported system: " + w) {}
};
class UndecidableComparison : public Error {
 public:
  explicit UndecidableComparison(const std::string& w)
      : Error("comparison undecidable: " + w) {}
};

// Layered-semigroup prerequisites (axioms that must hold before a
// construction applies).
class PrerequisiteFailed : public Error {
 public:
  PrerequisiteFailed(const std::string& which, const std::string& w)
      : Error("prerequisite " + which + " failed: " + w), prerequisite(which) {}
  std::string prerequisite;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& w) : Error("parse error: " + w) {}
};

}  // namespace cuntzlab

#endif
