#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace ifsjulia {

using cplx = std::complex<double>;

inline bool is_finite(const cplx& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

/// Wrap an angle into [0, 2*pi).
inline double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a;
}

/// Smallest signed difference a-b modulo 2*pi, in (-pi, pi].
inline double angle_diff(double a, double b) {
    double d = std::fmod(a - b, kTwoPi);
    if (d <= -kPi) d += kTwoPi;
    if (d > kPi) d -= kTwoPi;
    return d;
}

// ---------------------------------------------------------------------------
// Disks
// ---------------------------------------------------------------------------

struct Disk {
    cplx center;
    double radius = 1.0;

    Disk() = default;
    Disk(cplx c, double r) : center(c), radius(r) {
        if (!(r > 0.0) || !is_finite(c))
            throw std::invalid_argument("Disk: radius must be positive and finite");
    }

    bool contains(const cplx& z) const { return std::abs(z - center) <= radius; }
    bool contains_strict(const cplx& z) const { return std::abs(z - center) < radius; }
    cplx boundary_point(double angle) const { return center + radius * std::polar(1.0, angle); }
};

/// Distance between two closed disks (0 if they intersect).
inline double disk_distance(const Disk& a, const Disk& b) {
    return std::max(0.0, std::abs(a.center - b.center) - a.radius - b.radius);
}

/// Gap between the closures: positive iff disjoint, negative measures overlap depth.
inline double disk_gap(const Disk& a, const Disk& b) {
    return std::abs(a.center - b.center) - a.radius - b.radius;
}

inline Disk unit_disk() { return Disk(cplx(0.0, 0.0), 1.0); }

// ---------------------------------------------------------------------------
// Affine conformal contractions z -> a*z + b
// ---------------------------------------------------------------------------

/// Planar conformal contraction. Every conformal contraction of C is of this
/// form; the contraction factor is |a|.
struct AffineContraction {
    cplx a;
    cplx b;

    AffineContraction() : a(0.5, 0.0), b(0.0, 0.0) {}
    AffineContraction(cplx a_, cplx b_) : a(a_), b(b_) {
        if (!is_finite(a) || !is_finite(b))
            throw std::invalid_argument("AffineContraction: non-finite coefficients");
        double s = std::abs(a);
        if (!(s > 0.0 && s < 1.0))
            throw std::invalid_argument("AffineContraction: need 0 < |a| < 1, got |a|=" +
                                        std::to_string(s));
    }

    double factor() const { return std::abs(a); }

    cplx apply(const cplx& z) const { return a * z + b; }

    /// Inverse map z -> (z - b)/a. Defined on all of C; expands by 1/|a|.
    cplx apply_inverse(const cplx& z) const { return (z - b) / a; }

    /// Unique fixed point b/(1-a).
    cplx fixed_point() const { return b / (cplx(1.0, 0.0) - a); }

    /// Image of a disk: affine conformal maps send circles to circles.
    Disk image_disk(const Disk& d) const { return Disk(a * d.center + b, std::abs(a) * d.radius); }
};

/// Composition outer(inner(z)).
inline AffineContraction compose(const AffineContraction& outer, const AffineContraction& inner) {
    return AffineContraction(outer.a * inner.a, outer.a * inner.b + outer.b);
}

// ---------------------------------------------------------------------------
// Moebius maps
// ---------------------------------------------------------------------------

/// z -> (a*z + b) / (c*z + d), det = ad - bc != 0.
struct Mobius {
    cplx a{1.0, 0.0}, b{0.0, 0.0}, c{0.0, 0.0}, d{1.0, 0.0};

    cplx det() const { return a * d - b * c; }

    cplx apply(const cplx& z) const { return (a * z + b) / (c * z + d); }

    Mobius inverse() const { return Mobius{d, -b, -c, a}; }

    static Mobius identity() { return Mobius{}; }
    static Mobius translation(const cplx& t) { return Mobius{cplx(1, 0), t, cplx(0, 0), cplx(1, 0)}; }
};

inline Mobius compose(const Mobius& f, const Mobius& g) {
    return Mobius{f.a * g.a + f.b * g.c, f.a * g.b + f.b * g.d,
                  f.c * g.a + f.d * g.c, f.c * g.b + f.d * g.d};
}

// ---------------------------------------------------------------------------
// Normalization of an eccentric circle pair to concentric circles
// ---------------------------------------------------------------------------

/// Moebius map sending a strictly nested circle pair onto concentric circles
/// |z| = inner_radius and |z| = outer_radius about the origin.
struct CirclePairNormalization {
    Mobius forward;
    double inner_radius = 0.0;
    double outer_radius = 0.0;
};

/// Classical two-circle symmetrization: locate the pair of points symmetric
/// with respect to both circles and send them to 0 and infinity. Degenerates
/// smoothly to a translation for concentric input.
///
/// Requires closure(inner) strictly inside interior(outer); tangency within
/// 1e-10 is rejected.
inline CirclePairNormalization normalize_circle_pair(const Disk& outer, const Disk& inner) {
    constexpr double tol = 1e-10;
    const double e = std::abs(inner.center - outer.center);
    const double slack = outer.radius - (e + inner.radius);
    if (slack <= tol)
        throw std::invalid_argument(
            "normalize_circle_pair: inner circle not strictly nested in outer (slack=" +
            std::to_string(slack) + ")");

    CirclePairNormalization out;
    if (e < 1e-13 * std::max(1.0, outer.radius)) {
        out.forward = Mobius::translation(-outer.center);
        out.inner_radius = inner.radius;
        out.outer_radius = outer.radius;
        return out;
    }

    // Rigid change of chart zeta = (z - c_outer)/u puts the centers at 0 and e>0.
    const cplx u = (inner.center - outer.center) / e;
    const double r1 = outer.radius, r2 = inner.radius;

    // Common symmetric points p,q on the axis: roots of t^2 - s t + r1^2 = 0
    // with s = (r1^2 + e^2 - r2^2)/e. Stable form avoids cancellation for the
    // small root when the pair is nearly concentric.
    const double s = (r1 * r1 + e * e - r2 * r2) / e;
    const double disc = s * s - 4.0 * r1 * r1;
    if (disc <= 0.0)
        throw std::invalid_argument("normalize_circle_pair: degenerate configuration");
    const double root = std::sqrt(disc);
    const double p = 2.0 * r1 * r1 / (s + root);  // inside the inner disk
    const double q = s - p;                       // outside the outer circle

    Mobius m;
    m.a = cplx(1.0, 0.0);
    m.b = -(outer.center + p * u);
    m.c = cplx(1.0, 0.0);
    m.d = -(outer.center + q * u);
    out.forward = m;
    out.inner_radius = std::abs(m.apply(inner.center + inner.radius * u));
    out.outer_radius = std::abs(m.apply(outer.center + outer.radius * u));
    if (!(out.inner_radius < out.outer_radius))
        throw std::logic_error("normalize_circle_pair: radius ordering failed");
    return out;
}

}  // namespace ifsjulia
