#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "kitwpa/errors.hpp"

namespace kitwpa {

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-16;  // absolute floor, in the state's own units
  double initial_step = 0.0;  // 0 = pick from the span
  std::size_t max_steps = 50'000'000;
};

// Dormand-Prince 5(4) embedded pair over a complex state vector.
// rhs(z, y, dydz) fills the derivative; observer(z, y) runs after every
// accepted step (pass a no-op when not needed).
template <typename Rhs, typename Observer>
void integrate_rk45(Rhs&& rhs, std::vector<std::complex<double>>& y,
                    double z0, double z1, const IntegratorOptions& opt,
                    Observer&& observer) {
  using cvec = std::vector<std::complex<double>>;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                          b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // 5th-order minus embedded 4th-order weights (error estimator).
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t n = y.size();
  const double span = z1 - z0;
  if (!(span > 0.0)) return;

  cvec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);
  double z = z0;
  double h = opt.initial_step > 0.0 ? opt.initial_step : span / 1e4;
  h = std::min(h, span);
  double err_prev = 1.0;

  rhs(z, y, k1);  // FSAL seed
  for (std::size_t step = 0; step < opt.max_steps; ++step) {
    if (z >= z1) return;
    h = std::min(h, z1 - z);
    if (!(h > z1 * 1e-15 + 1e-300))
      throw StiffnessError(z, h);

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a21 * k1[i]);
    rhs(z + h / 5, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(z + 3 * h / 10, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(z + 4 * h / 5, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] =
          y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(z + 8 * h / 9, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                            a64 * k4[i] + a65 * k5[i]);
    rhs(z + h, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] +
                            b5 * k5[i] + b6 * k6[i]);
    rhs(z + h, ynew, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::complex<double> de = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                     e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      double scale =
          opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      double r = std::abs(de) / scale;
      err = std::max(err, r);
    }

    if (err <= 1.0) {
      z += h;
      y.swap(ynew);
      k1.swap(k7);  // first-same-as-last
      observer(z, y);
      // PI controller: gentle growth, memory of the previous error.
      double grow = 0.9 * std::pow(std::max(err, 1e-10), -0.7 / 5.0) *
                    std::pow(err_prev, 0.4 / 5.0);
      h *= std::clamp(grow, 0.2, 5.0);
      err_prev = std::max(err, 1e-10);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -1.0 / 5.0));
    }
  }
  throw StiffnessError(z, h);
}

}  // namespace kitwpa
