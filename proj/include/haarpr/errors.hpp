#pragma once

#include <stdexcept>
#include <string>

namespace haarpr {

// Invalid parameters / configuration. CLI maps this to exit code 1.
class param_error : public std::invalid_argument {
public:
  explicit param_error(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical routine could not reach its accuracy contract. Exit code 2.
class accuracy_error : public std::runtime_error {
public:
  explicit accuracy_error(const std::string& what) : std::runtime_error(what) {}
};

// An integrand handle returned a non-finite value; carries the abscissa.
class integrand_error : public accuracy_error {
public:
  integrand_error(const std::string& what, double abscissa)
      : accuracy_error(what + " at abscissa " + std::to_string(abscissa)),
        abscissa_(abscissa) {}
  double abscissa() const { return abscissa_; }

private:
  double abscissa_;
};

// The coercivity bracket of a variational solve contains no interior optimum.
class coercivity_error : public accuracy_error {
public:
  explicit coercivity_error(const std::string& what) : accuracy_error(what) {}
};

// Threshold bisection found no sign change in the scanned interval.
class scan_error : public accuracy_error {
public:
  explicit scan_error(const std::string& what) : accuracy_error(what) {}
};

}  // namespace haarpr
