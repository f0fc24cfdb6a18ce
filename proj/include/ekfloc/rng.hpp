#ifndef EKFLOC_RNG_HPP_
#define EKFLOC_RNG_HPP_

#include <cstdint>
#include <random>

namespace ekfloc {

/// Seeded random source with a fixed Gaussian sampling procedure.
///
/// mt19937_64 is fully specified by the standard and the Gaussian draws use
/// the Marsaglia polar method implemented here, so a given seed reproduces
/// the same sample stream on every platform (std::normal_distribution does
/// not guarantee that).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal sample (polar Box-Muller, cached spare).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  /// Normal sample with the given standard deviation.
  double gaussian(double sigma) { return sigma * gaussian(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ekfloc

#endif  // EKFLOC_RNG_HPP_
