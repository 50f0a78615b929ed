#pragma once

#include <stdexcept>
#include <string>

namespace cbml {

/// Base for every error raised by the library. Callers that want blanket
/// handling catch this; tests catch the concrete types.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A row with (near-)zero Euclidean norm cannot be projected to the sphere.
struct ZeroNormRow : Error {
  explicit ZeroNormRow(std::size_t row)
      : Error("row " + std::to_string(row) + " has zero norm and cannot be normalized") {}
};

/// Inputs whose shapes do not line up (matrix products, feature widths,
/// label counts against row counts).
struct DimMismatch : Error {
  using Error::Error;
};

/// A batch needs at least two distinct labels to form both pair sets.
struct InsufficientClasses : Error {
  using Error::Error;
};

/// Gaussian fitting needs at least two similarities on each side.
struct InsufficientPairs : Error {
  using Error::Error;
};

/// Gaussian fitting found a side with (near-)zero spread.
struct InsufficientVariance : Error {
  using Error::Error;
};

/// Parameter suggestion hit a fit it cannot invert (equal means, or a
/// non-positive slope for one of the exponential envelopes).
struct DegenerateFit : Error {
  using Error::Error;
};

/// An anchor with no negatives has an undefined positive/negative prior ratio.
struct UndefinedPriorRatio : Error {
  using Error::Error;
};

/// The loss evaluated to NaN or infinity.
struct NonFiniteLoss : Error {
  using Error::Error;
};

/// A gradient entry came out NaN or infinite.
struct NonFiniteGradient : Error {
  using Error::Error;
};

/// Retrieval asked for more neighbours than the gallery can supply,
/// or for a non-positive cutoff.
struct KOutOfRange : Error {
  using Error::Error;
};

/// Two label vectors that must align have different lengths.
struct LengthMismatch : Error {
  using Error::Error;
};

/// An evaluation set is missing one side of the pair partition entirely.
struct NoPairs : Error {
  using Error::Error;
};

/// Malformed text input (CSV rows, config lines). Carries the 1-based line.
struct ParseError : Error {
  explicit ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_number(line) {}
  std::size_t line_number;
};

/// A config key that the schema does not define, or a value that does not
/// parse as the declared type.
struct ConfigError : Error {
  using Error::Error;
};

/// A split spec that overlaps or names classes the dataset lacks.
struct InvalidSplit : Error {
  using Error::Error;
};

/// A class-disjoint split that would leave either side empty.
struct EmptySide : Error {
  using Error::Error;
};

/// Clustering asked for more centroids than there are points, or k < 1.
struct KTooLarge : Error {
  using Error::Error;
};

/// Model file with the wrong magic, version, or truncated payload.
struct ModelFormatError : Error {
  using Error::Error;
};

}  // namespace cbml
