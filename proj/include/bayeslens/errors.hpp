#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bayeslens {

// Base of all library errors. `code()` is a stable machine-readable tag; the
// CLI maps it to report fields and exit codes.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

// A generator or state name with no binding in the signature/bindings.
class UnboundNameError : public Error {
public:
  explicit UnboundNameError(const std::string& name, const std::string& path = {})
      : Error("unbound_name", "unbound name '" + name + "'" +
                                  (path.empty() ? "" : " at " + path)),
        name_(name), path_(path) {}
  const std::string& name() const noexcept { return name_; }
  const std::string& path() const noexcept { return path_; }

private:
  std::string name_;
  std::string path_;
};

// Ill-typed diagram: mismatched domains/codomains or mixed backends.
// `path()` locates the offending sub-expression (e.g. "seq[1].par[0]").
class TypeMismatchError : public Error {
public:
  TypeMismatchError(const std::string& path, const std::string& detail)
      : Error("type_mismatch",
              "type mismatch at " + (path.empty() ? std::string("<root>") : path) +
                  ": " + detail),
        path_(path) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

// Kernel-level shape violation (matrix dimensions out of step).
class DimensionMismatchError : public Error {
public:
  explicit DimensionMismatchError(const std::string& detail)
      : Error("dimension_mismatch", detail) {}
};

// An observation (or observation column) carries no mass under the prior's
// pushforward, so no conditional exists there.
class ZeroMassObservationError : public Error {
public:
  explicit ZeroMassObservationError(const std::string& detail)
      : Error("zero_mass_observation", detail) {}
};

// A support object with nothing in it (state with no mass anywhere).
class EmptySupportError : public Error {
public:
  explicit EmptySupportError(const std::string& detail)
      : Error("empty_support", detail) {}
};

// A prior that fails state validation (wrong shape, bad normalization,
// negative mass, non-PSD covariance).
class DegeneratePriorError : public Error {
public:
  explicit DegeneratePriorError(const std::string& detail)
      : Error("degenerate_prior", detail) {}
};

// Reserved for inversion requests outside the backend's closed form.
class UnsupportedInverseError : public Error {
public:
  explicit UnsupportedInverseError(const std::string& detail)
      : Error("unsupported_inverse", detail) {}
};

// Malformed model file (schema violations, unresolved references).
class ModelError : public Error {
public:
  explicit ModelError(const std::string& detail) : Error("model_error", detail) {}
};

}  // namespace bayeslens
