#pragma once

#include <stdexcept>
#include <string>

namespace isentrope {

// Base of every error raised by the library. `tag()` is a short stable
// identifier used in CSV failure rows and CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string tag, const std::string& what)
      : std::runtime_error(what), tag_(std::move(tag)) {}
  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
};

// Critical values violate the alternation constraint at `index` (1-based).
class ShapeError : public Error {
 public:
  ShapeError(int index, const std::string& what)
      : Error("shape", what), index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& what)
      : Error("singular", what) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : Error("convergence", what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

// A combinatorial computation hit its interval budget before `depth`.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, int depth_reached)
      : Error("budget", what), depth_reached_(depth_reached) {}
  int depth_reached() const noexcept { return depth_reached_; }

 private:
  int depth_reached_;
};

class RetargetError : public Error {
 public:
  RetargetError(const std::string& what, double suggestion)
      : Error("retarget", what), suggestion_(suggestion) {}
  double suggested_target() const noexcept { return suggestion_; }

 private:
  double suggestion_;
};

class NeedsHigherOrder : public Error {
 public:
  explicit NeedsHigherOrder(const std::string& what)
      : Error("needs-higher-order", what) {}
};

class NotApplicable : public Error {
 public:
  explicit NotApplicable(const std::string& what)
      : Error("not-applicable", what) {}
};

class InconsistentEstimates : public Error {
 public:
  explicit InconsistentEstimates(const std::string& what)
      : Error("inconsistent", what) {}
};

class BracketError : public Error {
 public:
  explicit BracketError(const std::string& what) : Error("bracket", what) {}
};

class NotABasin : public Error {
 public:
  explicit NotABasin(const std::string& what) : Error("not-a-basin", what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("usage", what) {}
};

}  // namespace isentrope
