#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rfqc {

// Dense row-major storage; all arithmetic runs in 64-bit floats so that
// finite-difference gradient checks stay meaningful.
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = MatX<double>;
using Vec = VecX<double>;

/// a (m x n) times x (n); throws std::invalid_argument on a size mismatch.
Vec matvec(const Mat& a, const Vec& x);

/// Elementwise logistic 1 / (1 + e^-x).
template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix().eval();
}

/// Elementwise tanh.
template <typename Derived>
auto tanh_act(const Eigen::MatrixBase<Derived>& x) {
  return x.array().tanh().matrix().eval();
}

/// Elementwise max(x, 0).
template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.array().max(0.0).matrix().eval();
}

/// Softmax with max-subtraction so large logits cannot overflow.
Vec softmax(const Vec& x);

// Deterministic 64-bit generator (splitmix64). The constants below are part
// of the file-format contract: checkpoints and splits replay bit-exactly on
// any implementation of the same stream.
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   out = z ^ (z >> 31)
//
// next_uniform() uses the top 53 bits: (out >> 11) * 2^-53, in [0, 1).
// next_below(n) is floor(out * n / 2^64).
// next_gaussian() is Box-Muller, cosine branch only; each call consumes
// exactly two uniforms u1, u2 and returns sqrt(-2 ln(1-u1)) * cos(2 pi u2).
class Prng {
 public:
  explicit Prng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_gaussian();

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t next_below(std::uint64_t n);

  /// Fisher-Yates shuffle driven by next_below.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace rfqc
