#pragma once

#include <cmath>
#include <vector>

#include "ifsjulia/geometry.hpp"
#include "ifsjulia/ifs.hpp"

namespace ifsjulia {

/// sqrt(1.2) - 1: the radius factor of the disks that the glue quadratic maps
/// into the closed disk of radius 2 (eps = 1/5 in the disk bound).
inline double ring_radius_factor() { return std::sqrt(1.2) - 1.0; }

// ---------------------------------------------------------------------------
// The glue quadratic p(z) = a (z - w)^2 - 10
// ---------------------------------------------------------------------------

/// Quadratic gluing two contraction branches: critical point w midway between
/// the prescribed zeros, leading coefficient a = 40/(z2-z1)^2 so that p
/// vanishes exactly at the two inputs. Square roots use the principal branch
/// (cut along the negative real axis); z1 keeps the first input, z2 the
/// second.
struct QuadraticGlue {
    cplx w;       // critical point
    cplx a;       // leading coefficient
    cplx z1, z2;  // zeros
    double r_star = 0.0;  // (sqrt(6/5)-1) * |10/a|^(1/2)

    cplx eval(const cplx& z) const {
        const cplx d = z - w;
        return a * d * d - 10.0;
    }

    double half_zero_distance() const { return std::sqrt(std::abs(10.0 / a)); }
};

inline QuadraticGlue build_quadratic(const cplx& wi, const cplx& wj) {
    const cplx diff = wj - wi;
    if (std::abs(diff) == 0.0)
        throw std::invalid_argument("build_quadratic: coincident zero inputs");
    QuadraticGlue q;
    q.w = 0.5 * (wi + wj);
    q.a = 40.0 / (diff * diff);
    q.z1 = wi;
    q.z2 = wj;
    q.r_star = ring_radius_factor() * q.half_zero_distance();
    return q;
}

inline cplx eval_quadratic(const QuadraticGlue& q, const cplx& z) { return q.eval(z); }

// ---------------------------------------------------------------------------
// The figure-eight p^{-1}(S(0,10))
// ---------------------------------------------------------------------------

struct FigureEight {
    std::vector<cplx> lobe1;  // closed, starts and ends at w, contains z1
    std::vector<cplx> lobe2;  // mirror lobe through w, contains z2

    /// Single closed polyline tracing both lobes through the crossing at w.
    std::vector<cplx> polyline() const {
        std::vector<cplx> all = lobe1;
        all.insert(all.end(), lobe2.begin(), lobe2.end());
        return all;
    }
};

/// Traces p^{-1}(S(0,10)). For theta in (-pi, pi) the circle point
/// 10 e^{i theta} has the two preimage branches
///   z = w +/- e^{i(theta/4 - arg(a)/2)} sqrt(20 cos(theta/2) / |a|),
/// continuous in theta by construction; theta -> +/-pi closes each lobe at w.
inline FigureEight figure_eight(const QuadraticGlue& q, std::size_t n_samples = 512) {
    if (n_samples < 64) throw std::invalid_argument("figure_eight: need n_samples >= 64");
    const double alpha = std::arg(q.a);
    const double inv_abs_a = 1.0 / std::abs(q.a);
    FigureEight fig;
    fig.lobe1.reserve(n_samples + 2);
    fig.lobe2.reserve(n_samples + 2);
    fig.lobe1.push_back(q.w);
    fig.lobe2.push_back(q.w);
    for (std::size_t k = 1; k < n_samples; ++k) {
        const double theta = -kPi + kTwoPi * static_cast<double>(k) / static_cast<double>(n_samples);
        const double mag = std::sqrt(20.0 * std::cos(0.5 * theta) * inv_abs_a);
        const cplx dir = std::polar(mag, 0.25 * theta - 0.5 * alpha);
        fig.lobe1.push_back(q.w + dir);
        fig.lobe2.push_back(q.w - dir);
    }
    fig.lobe1.push_back(q.w);
    fig.lobe2.push_back(q.w);

    // Orient each lobe so it winds positively about its own zero; which zero
    // sits in which lobe depends on arg(a) through the branch direction.
    const cplx probe = fig.lobe1[n_samples / 2] - q.w;
    const cplx to_z1 = q.z1 - q.w;
    if (std::abs(probe - to_z1) > std::abs(probe + to_z1)) std::swap(fig.lobe1, fig.lobe2);
    return fig;
}

/// Winding number of a closed polyline about a point (sum of turned angles).
inline int winding_number(const std::vector<cplx>& poly, const cplx& about) {
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < poly.size(); ++k) {
        const cplx u = poly[k] - about;
        const cplx v = poly[k + 1] - about;
        total += std::arg(v / u);
    }
    return static_cast<int>(std::lround(total / kTwoPi));
}

// ---------------------------------------------------------------------------
// The disk bound |p| <= 10 eps on the eps-calibrated circle around a zero
// ---------------------------------------------------------------------------

struct DiskBoundReport {
    double eps = 0.0;
    double radius = 0.0;        // (sqrt(1+eps)-1) |10/a|^(1/2)
    double max_abs_p = 0.0;     // sampled max of |p| on the circle around z1
    double bound = 0.0;         // 10 * eps
    bool pass = false;
};

inline DiskBoundReport check_disk_bound(const QuadraticGlue& q, double eps,
                                        std::size_t n_samples = 4096) {
    if (!(eps > 0.0)) throw std::invalid_argument("check_disk_bound: eps must be positive");
    n_samples = std::max<std::size_t>(n_samples, 4096);
    DiskBoundReport rep;
    rep.eps = eps;
    rep.radius = (std::sqrt(1.0 + eps) - 1.0) * q.half_zero_distance();
    rep.bound = 10.0 * eps;
    double worst = 0.0;
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double t = kTwoPi * static_cast<double>(k) / static_cast<double>(n_samples);
        const cplx z = q.z1 + std::polar(rep.radius, t);
        worst = std::max(worst, std::abs(q.eval(z)));
    }
    rep.max_abs_p = worst;
    rep.pass = worst <= rep.bound + 1e-9;
    return rep;
}

// ---------------------------------------------------------------------------
// Containment checks tying the glue radii to a separation plan
// ---------------------------------------------------------------------------

struct ContainmentReport {
    bool inside_unit = false;     // B(w_i, R*) and B(w_j, R*) inside the unit disk
    double unit_margin = 0.0;     // 1 - T - R*
    bool radius_ok = false;       // B(w, delta r) inside B(w, R*), i.e. R* > delta r
    double radius_margin = 0.0;   // R* - delta r
    bool ring_gap_ok = false;     // separation route: (sqrt(6/5)-1) d > 2 delta r
    double ring_gap_margin = 0.0; // (sqrt(6/5)-1) d_lower - 2 delta r

    bool pass() const { return inside_unit && radius_ok && ring_gap_ok; }

    std::string failure() const {
        if (!inside_unit) return "R*-disks exit the unit disk (T too close to 1)";
        if (!radius_ok) return "delta*r disk not contained in the R* disk";
        if (!ring_gap_ok) return "(sqrt(6/5)-1)*d <= 2*delta*r";
        return "";
    }
};

/// Verifies the two containments the construction needs: the R*-disks around
/// both zeros stay inside the unit disk (via the plan's T), and the delta*r
/// disks sit strictly inside the R*-disks. The latter is checked both
/// directly (R* > delta r) and through the separation-distance inequality
/// (sqrt(6/5)-1) d > 2 delta r whose margin goes negative near delta ~ 0.0218.
inline ContainmentReport validate_containment(const QuadraticGlue& q, const SeparationPlan& plan) {
    ContainmentReport rep;
    rep.unit_margin = 1.0 - plan.T - q.r_star;
    rep.inside_unit = rep.unit_margin > 0.0;
    rep.radius_margin = q.r_star - plan.delta * plan.r;
    rep.radius_ok = rep.radius_margin > 0.0;
    rep.ring_gap_margin = ring_radius_factor() * plan.d_lower - 2.0 * plan.delta * plan.r;
    rep.ring_gap_ok = rep.ring_gap_margin > 0.0;
    return rep;
}

}  // namespace ifsjulia
