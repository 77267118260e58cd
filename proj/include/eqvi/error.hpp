#pragma once

#include <stdexcept>
#include <string>

namespace eqvi {

/// Shapes or table sizes that do not agree with the MDP they are used with.
class StructuralError : public std::invalid_argument {
 public:
  explicit StructuralError(const std::string& what) : std::invalid_argument(what) {}
};

/// An argument outside the domain of an operation (bad probability, n = 0, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// An MDP whose kernel or costs violate the model invariants.
class InvalidMdp : public std::invalid_argument {
 public:
  explicit InvalidMdp(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace eqvi
