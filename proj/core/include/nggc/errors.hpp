#pragma once

#include <stdexcept>
#include <string>

namespace nggc {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// tf_core
class PoleOnAxis : public Error { using Error::Error; };
class UnstableSystem : public Error { using Error::Error; };
class ImproperSystem : public Error { using Error::Error; };
class DegenerateLoop : public Error { using Error::Error; };
class Indeterminate : public Error { using Error::Error; };
class InvalidArgument : public Error { using Error::Error; };

// netmodel / devlib
class InvalidNetwork : public Error { using Error::Error; };
class InvalidParameters : public Error { using Error::Error; };

// certkit
class MissingShift : public Error { using Error::Error; };

// simkit
class ZeroNumerator : public Error { using Error::Error; };
class IllPosedLoop : public Error { using Error::Error; };
class StepTooCoarse : public Error { using Error::Error; };

// cli
class SchemaError : public Error { using Error::Error; };

}  // namespace nggc
