#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace latentswipe {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class TooFewSamples : public Error {
 public:
  using Error::Error;
};

class DegenerateCovariance : public Error {
 public:
  DegenerateCovariance(std::size_t rank, std::size_t requested)
      : Error("degenerate covariance: rank " + std::to_string(rank) +
              " < requested " + std::to_string(requested)),
        rank_(rank) {}
  std::size_t rank() const noexcept { return rank_; }

 private:
  std::size_t rank_;
};

class NewtonDivergence : public Error {
 public:
  using Error::Error;
};

class IllConditionedKernel : public Error {
 public:
  using Error::Error;
};

class UnfittedModel : public Error {
 public:
  using Error::Error;
};

class NoArms : public Error {
 public:
  using Error::Error;
};

class InvalidArm : public Error {
 public:
  using Error::Error;
};

class ConfigMismatch : public Error {
 public:
  using Error::Error;
};

class SessionFinished : public Error {
 public:
  using Error::Error;
};

class ReplayMismatch : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ExternalUnavailable : public Error {
 public:
  using Error::Error;
};

class ExternalTimeout : public ExternalUnavailable {
 public:
  using ExternalUnavailable::ExternalUnavailable;
};

}  // namespace latentswipe
