#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stokes2p {

/// Invalid configuration, grid mismatch, or infeasible request.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Dense assembly requested above the configured size cap.
class SizeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Iterative solve did not reach its tolerance. Carries the residual history.
class SolverFailure : public std::runtime_error {
  public:
    SolverFailure(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

/// The excision/extrapolation oracle failed to converge.
class OracleFailure : public std::runtime_error {
  public:
    OracleFailure(const std::string& what, std::vector<double> table)
        : std::runtime_error(what), extrapolation_table(std::move(table)) {}
    std::vector<double> extrapolation_table;
};

/// Field evaluation point lies too close to the interface for plain quadrature.
class NearBoundaryError : public std::runtime_error {
  public:
    NearBoundaryError(const std::string& what, double dist)
        : std::runtime_error(what), distance(dist) {}
    double distance;
};

/// A time step produced non-finite values or could not be taken.
class StepFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace stokes2p
