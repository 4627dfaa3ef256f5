#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdnr {

/// Base of every error raised by the library. `exit_code()` is the process
/// status the command-line front end reports for it.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

/// Vector or matrix sizes that do not agree with the owning network.
class DimensionError : public Error {
  public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// Disconnected graphs, multiple substations, malformed loops.
class TopologyError : public Error {
  public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

class ArgumentError : public Error {
  public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

class PreconditionError : public Error {
  public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// Malformed input files (case, scenario, CSV, model, dataset).
class InputError : public Error {
  public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class IngestionError : public Error {
  public:
    IngestionError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const noexcept { return row_; }
    int exit_code() const noexcept override { return 2; }

  private:
    std::size_t row_;
};

class NumericError : public Error {
  public:
    using Error::Error;
    int exit_code() const noexcept override { return 5; }
};

/// Raised when a capped enumeration stops before exhausting the space.
class EnumerationTruncated : public Error {
  public:
    explicit EnumerationTruncated(std::size_t partial)
        : Error("enumeration truncated after " + std::to_string(partial) + " configurations"),
          partial_(partial) {}
    std::size_t partial_count() const noexcept { return partial_; }
    int exit_code() const noexcept override { return 4; }

  private:
    std::size_t partial_;
};

/// A topology whose power flow fails in at least one scenario.
class InfeasibleTopology : public Error {
  public:
    InfeasibleTopology(std::size_t scenario, const std::string& what)
        : Error("scenario " + std::to_string(scenario) + ": " + what), scenario_(scenario) {}
    std::size_t scenario() const noexcept { return scenario_; }
    int exit_code() const noexcept override { return 5; }

  private:
    std::size_t scenario_;
};

class NoFeasibleTopology : public Error {
  public:
    using Error::Error;
    int exit_code() const noexcept override { return 5; }
};

class EmptyDatasetError : public Error {
  public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

class TrainingError : public Error {
  public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

}  // namespace sdnr
