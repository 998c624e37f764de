#pragma once

#include <stdexcept>
#include <string>

namespace refgov {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition broken by the caller (kappa out of range, bad sizes, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A state or sensitivity became non-finite; `step()` is the sample index.
class DivergedTrajectory : public Error {
 public:
  DivergedTrajectory(const std::string& what, int step);
  int step() const noexcept { return step_; }

 private:
  int step_;
};

class DivergedSensitivity : public DivergedTrajectory {
 public:
  using DivergedTrajectory::DivergedTrajectory;
};

class NonConvergentEquilibrium : public Error {
 public:
  using Error::Error;
};

class MapDomainError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, int epoch);
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class CorruptFile : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NonTermination : public Error {
 public:
  using Error::Error;
};

}  // namespace refgov
