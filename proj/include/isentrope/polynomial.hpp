#pragma once

#include <span>
#include <vector>

namespace isentrope {

// Dense real polynomial with coefficients in ascending monomial order.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs);

  double operator()(double x) const noexcept;
  Polynomial derivative() const;
  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  std::span<const double> coefficients() const noexcept { return coeffs_; }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

 private:
  std::vector<double> coeffs_;
};

// All simple real roots of `p` in the open interval (lo, hi), ascending.
// Roots are isolated recursively between the roots of p' and refined by
// bisection to machine precision, so even-multiplicity roots are not reported.
std::vector<double> real_roots(const Polynomial& p, double lo, double hi);

// Root of a continuous function with f(lo), f(hi) of opposite signs.
template <typename F>
double bisect(F&& f, double lo, double hi, double flo, int max_iter = 200) {
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace isentrope
