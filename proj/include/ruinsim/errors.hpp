#pragma once

#include <stdexcept>

namespace ruinsim {

/// Invalid parameters for a law, model, or configuration.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called outside its mathematical domain
/// (e.g. an infinite horizon with mu_alpha >= 1).
class PreconditionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The (F, G) pair is not certified to satisfy the convex-combination
/// strong-regular-variation assumption.
class AssumptionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace ruinsim
