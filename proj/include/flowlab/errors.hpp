#pragma once

#include <stdexcept>
#include <string>

namespace flowlab {

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Spacelikeness violated at grid point `index`, where `value` = σ^{ij}u_i u_j.
struct GeometryError : std::runtime_error {
  GeometryError(const std::string& what, std::size_t index, double value)
      : std::runtime_error(what), index(index), value(value) {}
  std::size_t index;
  double value;
};

struct AdmissibilityError : std::runtime_error {
  AdmissibilityError(const std::string& what, std::size_t index)
      : std::runtime_error(what), index(index) {}
  std::size_t index;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CflError : std::runtime_error {
  CflError(const std::string& what, double suggested_dt)
      : std::runtime_error(what), suggested_dt(suggested_dt) {}
  double suggested_dt;
};

struct FoliateError : std::runtime_error {
  FoliateError(const std::string& what, double last_good_eps)
      : std::runtime_error(what), last_good_eps(last_good_eps) {}
  double last_good_eps;
};

struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace flowlab
