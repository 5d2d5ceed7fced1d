#pragma once

#include <array>
#include <complex>

#include "ballmap/mesh.hpp"

namespace ballmap {

// Extended complex number: a point of the Riemann sphere.
struct ExtComplex {
  std::complex<double> z{0.0, 0.0};
  bool inf = false;

  ExtComplex() = default;
  ExtComplex(double re, double im = 0.0) : z(re, im) {}
  ExtComplex(std::complex<double> value) : z(value) {}
  static ExtComplex infinity() {
    ExtComplex e;
    e.inf = true;
    return e;
  }
};

// Chordal distance on the Riemann sphere (range [0,2]).
double chordal_distance(const ExtComplex& a, const ExtComplex& b);

// Fractional-linear transformation z -> (az+b)/(cz+d), ad - bc != 0.
struct MobiusTransform {
  std::complex<double> a{1, 0}, b{0, 0}, c{0, 0}, d{1, 0};

  std::complex<double> determinant() const { return a * d - b * c; }
  ExtComplex apply(const ExtComplex& p) const;
  MobiusTransform inverse() const;
  // Composition: (*this) after inner.
  MobiusTransform compose(const MobiusTransform& inner) const;
  // Coefficients divided by a square root of the determinant.
  MobiusTransform normalized() const;

  static MobiusTransform identity() { return {}; }
};

// The transform sending (p1,p2,p3) to (0,inf,1):
//   rho(z) = (z-p1)(p3-p2) / ((z-p2)(p3-p1)),
// with the standard limit forms when one input is inf.
// Throws ValidationError on (near-)coincident points.
MobiusTransform mobius_three_point(const ExtComplex& p1, const ExtComplex& p2,
                                   const ExtComplex& p3);

// Stereographic projection from the north pole (0,0,1):
//   (x,y,z) -> (x+iy)/(1-z), north pole -> inf.
ExtComplex stereographic(const Vec3& p);
Vec3 inverse_stereographic(const ExtComplex& w);

// Conformal automorphism of the unit sphere: a Mobius transform conjugated
// by stereographic projection. Extends to the closed unit ball via the
// Poincare extension (quaternion evaluation on upper half-space).
struct SphereAutomorphism {
  MobiusTransform mobius; // action in stereographic coordinates

  Vec3 apply(const Vec3& p) const;      // sphere point -> sphere point
  Vec3 apply_ball(const Vec3& x) const; // any point of the closed unit ball
  SphereAutomorphism inverse() const { return {mobius.inverse()}; }
};

// Automorphism eta with eta(from[k]) = to[k] for three sphere points each:
// pi^{-1} o rho_to^{-1} o rho_from o pi.
// Throws ValidationError when a triple is near-coincident (chordal
// distance < 1e-6 on the sphere).
SphereAutomorphism sphere_automorphism(const std::array<Vec3, 3>& from,
                                       const std::array<Vec3, 3>& to);

} // namespace ballmap
