#include "ballmap/mobius.hpp"

#include <cmath>

#include "ballmap/errors.hpp"

namespace ballmap {

namespace {

using Complex = std::complex<double>;

// Quaternion w + xi + yj + zk, used only for the Poincare extension.
struct Quat {
  double w = 0, x = 0, y = 0, z = 0;

  static Quat from_complex(const Complex& c) { return {c.real(), c.imag(), 0, 0}; }
  Quat operator+(const Quat& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
  Quat operator*(const Quat& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }
  double norm2() const { return w * w + x * x + y * y + z * z; }
  Quat inverse() const {
    const double n = norm2();
    return {w / n, -x / n, -y / n, -z / n};
  }
};

} // namespace

double chordal_distance(const ExtComplex& a, const ExtComplex& b) {
  if (a.inf && b.inf) return 0.0;
  if (a.inf) return 2.0 / std::sqrt(1.0 + std::norm(b.z));
  if (b.inf) return 2.0 / std::sqrt(1.0 + std::norm(a.z));
  return 2.0 * std::abs(a.z - b.z) /
         (std::sqrt(1.0 + std::norm(a.z)) * std::sqrt(1.0 + std::norm(b.z)));
}

ExtComplex MobiusTransform::apply(const ExtComplex& p) const {
  if (p.inf) {
    if (c == Complex(0, 0)) return ExtComplex::infinity();
    return ExtComplex(a / c);
  }
  const Complex den = c * p.z + d;
  if (den == Complex(0, 0)) return ExtComplex::infinity();
  return ExtComplex((a * p.z + b) / den);
}

MobiusTransform MobiusTransform::inverse() const { return {d, -b, -c, a}; }

MobiusTransform MobiusTransform::compose(const MobiusTransform& inner) const {
  return {a * inner.a + b * inner.c, a * inner.b + b * inner.d,
          c * inner.a + d * inner.c, c * inner.b + d * inner.d};
}

MobiusTransform MobiusTransform::normalized() const {
  const Complex s = std::sqrt(determinant());
  if (s == Complex(0, 0)) return *this;
  return {a / s, b / s, c / s, d / s};
}

MobiusTransform mobius_three_point(const ExtComplex& p1, const ExtComplex& p2,
                                   const ExtComplex& p3) {
  const double sep = std::min({chordal_distance(p1, p2), chordal_distance(p2, p3),
                               chordal_distance(p1, p3)});
  if (sep < 1e-12) throw ValidationError("three-point Mobius: coincident points");

  if (p1.inf) return {Complex(0, 0), p3.z - p2.z, Complex(1, 0), -p2.z};
  if (p2.inf) return {Complex(1, 0), -p1.z, Complex(0, 0), p3.z - p1.z};
  if (p3.inf) return {Complex(1, 0), -p1.z, Complex(1, 0), -p2.z};
  return {p3.z - p2.z, -p1.z * (p3.z - p2.z), p3.z - p1.z, -p2.z * (p3.z - p1.z)};
}

ExtComplex stereographic(const Vec3& p) {
  const double denom = 1.0 - p.z();
  if (denom < 1e-300) return ExtComplex::infinity();
  return ExtComplex(Complex(p.x(), p.y()) / denom);
}

Vec3 inverse_stereographic(const ExtComplex& w) {
  if (w.inf) return Vec3(0, 0, 1);
  const double r2 = std::norm(w.z);
  if (r2 > 1e300) return Vec3(0, 0, 1);
  const double denom = 1.0 + r2;
  return Vec3(2.0 * w.z.real() / denom, 2.0 * w.z.imag() / denom, (r2 - 1.0) / denom);
}

Vec3 SphereAutomorphism::apply(const Vec3& p) const {
  return inverse_stereographic(mobius.apply(stereographic(p)));
}

Vec3 SphereAutomorphism::apply_ball(const Vec3& x) const {
  // Ball -> lower half-space by the inversion J about (north pole, radius
  // sqrt(2)); J extends stereographic projection and is an involution.
  const Vec3 north(0, 0, 1);
  const Vec3 dx = x - north;
  const double n2 = dx.squaredNorm();
  if (n2 < 1e-300) return inverse_stereographic(mobius.apply(ExtComplex::infinity()));
  const Vec3 h = north + 2.0 * dx / n2;

  // Mirror into the upper half-space, act by the quaternion form of the
  // Mobius map (the Poincare extension), mirror and invert back.
  Quat q{h.x(), h.y(), -h.z(), 0};
  const Quat num = Quat::from_complex(mobius.a) * q + Quat::from_complex(mobius.b);
  const Quat den = Quat::from_complex(mobius.c) * q + Quat::from_complex(mobius.d);
  const double den2 = den.norm2();
  if (den2 < 1e-300) return Vec3(0, 0, 1);
  const Quat r = num * den.inverse();

  const Vec3 hr(r.w, r.x, -r.y); // k-component vanishes identically
  const Vec3 dr = hr - north;
  const double m2 = dr.squaredNorm();
  if (m2 < 1e-300) return Vec3(0, 0, 1);
  return north + 2.0 * dr / m2;
}

SphereAutomorphism sphere_automorphism(const std::array<Vec3, 3>& from,
                                       const std::array<Vec3, 3>& to) {
  for (const auto& trio : {from, to}) {
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        if ((trio[i] - trio[j]).norm() < 1e-6)
          throw ValidationError("sphere automorphism: near-coincident feature points");
  }
  const MobiusTransform rho1 =
      mobius_three_point(stereographic(from[0]), stereographic(from[1]), stereographic(from[2]));
  const MobiusTransform rho2 =
      mobius_three_point(stereographic(to[0]), stereographic(to[1]), stereographic(to[2]));
  return {rho2.inverse().compose(rho1).normalized()};
}

} // namespace ballmap
