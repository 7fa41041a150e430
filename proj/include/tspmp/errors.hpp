// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

namespace tspmp {

/// Base class for all library errors. Catching this is enough to map any
/// failure of the numerical layers onto a process exit code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A queried instant does not belong to the time scale (within tolerance).
struct PointNotInScale : Error {
  using Error::Error;
};

/// The latest-sampling-instant map was queried left of the first sample.
struct EmptyPredecessor : Error {
  using Error::Error;
};

/// Interval endpoints out of order, or a parameter outside its admissible range.
struct InvalidRange : Error {
  using Error::Error;
};

/// Nonpositive or otherwise unusable grid step.
struct InvalidStep : Error {
  using Error::Error;
};

/// Vector or matrix sizes disagree with the problem dimensions.
struct DimensionMismatch : Error {
  using Error::Error;
};

/// A control value lies outside the admissible box.
struct ConstraintViolation : Error {
  using Error::Error;
};

/// Two objects that must share an evaluation grid do not.
struct GridMismatch : Error {
  using Error::Error;
};

/// A variation was requested at a point of the wrong classification.
struct WrongPointClass : Error {
  using Error::Error;
};

/// State integration produced a NaN or infinity.
struct NonFiniteState : Error {
  using Error::Error;
};

/// The scenario asks for a combination the solvers do not cover.
struct UnsupportedScenario : Error {
  using Error::Error;
};

/// Input file could not be parsed.
struct ParseError : Error {
  using Error::Error;
};

/// An expected result file is absent.
struct MissingResult : Error {
  using Error::Error;
};

/// A computed quantity disagrees with a pinned expectation.
struct ExpectationMismatch : Error {
  using Error::Error;
};

/// A solver failed in a way that leaves no usable result.
struct SolveError : Error {
  using Error::Error;
};

}  // namespace tspmp
