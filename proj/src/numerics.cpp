#include "rfqc/numerics.hpp"

#include <cmath>
#include <string>

namespace rfqc {

Vec matvec(const Mat& a, const Vec& x) {
  if (a.cols() != x.size()) {
    throw std::invalid_argument("matvec: dimension mismatch (" + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " * " +
                                std::to_string(x.size()) + ")");
  }
  return a * x;
}

Vec softmax(const Vec& x) {
  if (x.size() < 1) throw std::invalid_argument("softmax: empty input");
  const double m = x.maxCoeff();
  Vec e = (x.array() - m).exp().matrix();
  return e / e.sum();
}

double Prng::next_gaussian() {
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  return r * std::cos(2.0 * M_PI * u2);
}

std::uint64_t Prng::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

}  // namespace rfqc
