#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

namespace kitwpa {

using complex = std::complex<double>;

// Chain (ABCD) matrix of a two-port: [v1, i1]^T = M [v2, i2]^T.
// Cascading left-to-right along the line is plain matrix multiplication.
struct TwoPort {
  complex a{1.0}, b{0.0}, c{0.0}, d{1.0};

  complex det() const { return a * d - b * c; }

  bool is_reciprocal(double tol = 1e-9) const {
    return std::abs(det() - 1.0) < tol;
  }

  TwoPort& operator*=(const TwoPort& r) {
    *this = *this * r;
    return *this;
  }

  friend TwoPort operator*(const TwoPort& l, const TwoPort& r) {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
            l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
  }
};

// Lossless line segment: characteristic impedance z0, phase constant beta.
inline TwoPort line_segment(double z0, double beta, double length) {
  if (z0 <= 0.0) throw std::domain_error("line_segment: z0 must be positive");
  if (length < 0.0) throw std::domain_error("line_segment: negative length");
  const double th = beta * length;
  const double cs = std::cos(th), sn = std::sin(th);
  return {complex(cs, 0.0), complex(0.0, z0 * sn),
          complex(0.0, sn / z0), complex(cs, 0.0)};
}

// Shunt element with admittance y across the line.
inline TwoPort shunt_admittance(complex y) {
  return {complex(1.0), complex(0.0), y, complex(1.0)};
}

}  // namespace kitwpa
