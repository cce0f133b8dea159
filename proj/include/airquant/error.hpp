#ifndef AIRQUANT_ERROR_HPP
#define AIRQUANT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace airquant {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File cannot be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents (bad magic, truncated header, inconsistent sizes).
class FormatError : public Error {
public:
    using Error::Error;
};

/// On-disk datatype code this reader does not handle.
class UnsupportedDatatypeError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Non-positive dims/spacing, or two grids that were required to match do not.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// An operation that requires foreground voxels received an empty mask or ROI.
class EmptyInputError : public Error {
public:
    using Error::Error;
};

/// No connected component found in the upper region of the mask.
class TracheaNotFoundError : public Error {
public:
    using Error::Error;
};

/// A mask that must be a subset of another is not.
class ContainmentError : public Error {
public:
    using Error::Error;
};

/// Feature-name/column mismatch between a table and a scaler or model.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Labels required but absent.
class MissingLabelsError : public Error {
public:
    using Error::Error;
};

/// Training data contains a single class.
class DegenerateTrainingError : public Error {
public:
    using Error::Error;
};

/// Stratified folds cannot be formed (a class has fewer cases than folds).
class StratificationError : public Error {
public:
    using Error::Error;
};

/// Case-id sequences of two tables do not line up.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Invalid pipeline configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace airquant

#endif
