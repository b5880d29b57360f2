#include "isentrope/polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace isentrope {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
  if (coeffs_.empty()) coeffs_.push_back(0.0);
}

double Polynomial::operator()(double x) const noexcept {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (coeffs_.size() <= 1) return Polynomial({0.0});
  std::vector<double> d(coeffs_.size() - 1);
  for (std::size_t k = 1; k < coeffs_.size(); ++k)
    d[k - 1] = static_cast<double>(k) * coeffs_[k];
  return Polynomial(std::move(d));
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
  for (std::size_t k = 0; k < a.coeffs_.size(); ++k) c[k] += a.coeffs_[k];
  for (std::size_t k = 0; k < b.coeffs_.size(); ++k) c[k] += b.coeffs_[k];
  return Polynomial(std::move(c));
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j)
      c[i + j] += a.coeffs_[i] * b.coeffs_[j];
  return Polynomial(std::move(c));
}

std::vector<double> real_roots(const Polynomial& p, double lo, double hi) {
  std::vector<double> roots;
  if (p.degree() <= 0) return roots;
  if (p.degree() == 1) {
    const auto c = p.coefficients();
    const double r = -c[0] / c[1];
    if (r > lo && r < hi) roots.push_back(r);
    return roots;
  }
  // p is monotone between consecutive critical points.
  std::vector<double> knots{lo};
  for (double c : real_roots(p.derivative(), lo, hi)) knots.push_back(c);
  knots.push_back(hi);
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double a = knots[k], b = knots[k + 1];
    const double fa = p(a), fb = p(b);
    if (fa == 0.0) {
      if (a > lo && (roots.empty() || roots.back() != a)) roots.push_back(a);
      continue;
    }
    if (fb == 0.0 || (fa < 0) == (fb < 0)) continue;
    roots.push_back(bisect(p, a, b, fa));
  }
  return roots;
}

}  // namespace isentrope
