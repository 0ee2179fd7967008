#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace qsm {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Maps any real phase into [0, 2pi).
inline double wrap_phase(double phi) {
  double r = std::fmod(phi, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r -= two_pi;
  return r;
}

// Signed distance a - b on the circle, in [-pi, pi).
inline double circular_difference(double a, double b) {
  double d = std::fmod(a - b + pi, two_pi);
  if (d < 0.0) d += two_pi;
  return d - pi;
}

// Representative of phi among {phi - 2pi, phi, phi + 2pi} closest to center.
inline double unwrap_near(double phi, double center) {
  double best = phi;
  for (double shift : {-two_pi, two_pi}) {
    if (std::abs(phi + shift - center) < std::abs(best - center)) best = phi + shift;
  }
  return best;
}

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

}  // namespace qsm
