#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dtg {

// mt19937_64 with fixed real/normal mappings. std::uniform_real_distribution
// and friends are implementation-defined sequences; committed fixtures need
// draws that do not change with the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // [0, 1)
  double uniform() { return std::ldexp(static_cast<double>(gen_() >> 11), -53); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  bool coin(double p = 0.5) { return uniform() < p; }

  double normal(double sigma) {
    if (sigma == 0.0) return 0.0;
    if (have_spare_) {
      have_spare_ = false;
      return spare_ * sigma;
    }
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a) * sigma;
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dtg
