#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "ifsjulia/geometry.hpp"

namespace ifsjulia {

using PlanarMap = std::function<cplx(const cplx&)>;

// ---------------------------------------------------------------------------
// Boundary correspondences on circles
// ---------------------------------------------------------------------------

/// Sampled boundary map: source angle on a circle -> target point. Angles are
/// strictly increasing over [0, 2pi); evaluation interpolates periodically.
struct BoundaryCorrespondence {
    std::vector<double> angles;
    std::vector<cplx> targets;
    bool closed = true;

    static BoundaryCorrespondence sample_map(const Disk& circle, const PlanarMap& fn,
                                             std::size_t n) {
        BoundaryCorrespondence bc;
        bc.angles.reserve(n);
        bc.targets.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double a = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
            bc.angles.push_back(a);
            bc.targets.push_back(fn(circle.boundary_point(a)));
        }
        return bc;
    }

    cplx eval(double angle) const {
        const std::size_t n = angles.size();
        const double a = wrap_angle(angle);
        // locate the sample interval (angles strictly increasing in [0,2pi))
        std::size_t lo = 0, hi = n;
        while (lo + 1 < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (angles[mid] <= a) lo = mid; else hi = mid;
        }
        const std::size_t k = (a < angles[0]) ? n - 1 : lo;
        const double a0 = angles[k];
        const double a1 = (k + 1 < n) ? angles[k + 1] : angles[0] + kTwoPi;
        double aa = a;
        if (aa < a0) aa += kTwoPi;
        const double t = (a1 > a0) ? (aa - a0) / (a1 - a0) : 0.0;
        const cplx p0 = targets[k];
        const cplx p1 = targets[(k + 1) % n];
        return p0 + t * (p1 - p0);
    }

    double signed_area() const {
        double s = 0.0;
        const std::size_t n = targets.size();
        for (std::size_t k = 0; k < n; ++k) {
            const cplx& p = targets[k];
            const cplx& q = targets[(k + 1) % n];
            s += p.real() * q.imag() - q.real() * p.imag();
        }
        return 0.5 * s;
    }

    /// Throws on structural defects. The O(n^2) self-intersection scan is
    /// only run when requested; star-shaped validity inside the blends covers
    /// the pipeline's curves.
    void validate(bool check_jordan = false) const {
        const std::size_t n = angles.size();
        if (n < 8 || targets.size() != n)
            throw std::invalid_argument("BoundaryCorrespondence: need >= 8 consistent samples");
        for (std::size_t k = 0; k + 1 < n; ++k)
            if (!(angles[k] < angles[k + 1]))
                throw std::invalid_argument("BoundaryCorrespondence: angles not strictly increasing");
        if (!(angles.front() >= 0.0 && angles.back() < kTwoPi))
            throw std::invalid_argument("BoundaryCorrespondence: angles outside [0, 2pi)");
        if (signed_area() <= 0.0)
            throw std::invalid_argument("BoundaryCorrespondence: orientation not preserved");
        if (check_jordan) {
            auto seg = [&](std::size_t k, cplx& p, cplx& q) {
                p = targets[k];
                q = targets[(k + 1) % n];
            };
            auto crosses = [](cplx a, cplx b, cplx c, cplx d) {
                auto orient = [](cplx p, cplx q, cplx r) {
                    const double v = (q.real() - p.real()) * (r.imag() - p.imag()) -
                                     (q.imag() - p.imag()) * (r.real() - p.real());
                    return (v > 0.0) - (v < 0.0);
                };
                return orient(a, b, c) != orient(a, b, d) && orient(c, d, a) != orient(c, d, b);
            };
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 2; j < n; ++j) {
                    if (i == 0 && j == n - 1) continue;  // adjacent around the loop
                    cplx a, b, c, d;
                    seg(i, a, b);
                    seg(j, c, d);
                    if (crosses(a, b, c, d))
                        throw std::invalid_argument(
                            "BoundaryCorrespondence: target polyline self-intersects near segment " +
                            std::to_string(i));
                }
        }
    }
};

// ---------------------------------------------------------------------------
// Periodic sampled functions on the uniform angle grid
// ---------------------------------------------------------------------------

namespace detail {

/// Values on the uniform grid theta_k = 2 pi k / n with an additive winding
/// per revolution: f(theta + 2 pi) = f(theta) + period_step.
template <typename T>
struct PeriodicSamples {
    std::vector<T> v;
    T period_step{};

    T eval(double theta) const {
        const std::size_t n = v.size();
        double u = wrap_angle(theta) / kTwoPi * static_cast<double>(n);
        std::size_t k = static_cast<std::size_t>(u);
        if (k >= n) k = n - 1;
        const double frac = u - static_cast<double>(k);
        const T next = (k + 1 < n) ? v[k + 1] : v[0] + period_step;
        return v[k] + frac * (next - v[k]);
    }
};

/// Unwraps the argument of (pts[k] - center) into a continuous log sequence.
/// Returns samples of log(pts - center) whose imaginary part increases by
/// 2 pi * winding over one revolution.
inline PeriodicSamples<cplx> unwrapped_log(const std::vector<cplx>& pts, const cplx& center,
                                           int expect_winding = 1) {
    PeriodicSamples<cplx> out;
    const std::size_t n = pts.size();
    out.v.reserve(n);
    double prev_arg = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const cplx d = pts[k] - center;
        const double m = std::abs(d);
        if (!(m > 0.0))
            throw std::invalid_argument("unwrapped_log: curve passes through the center");
        double a = std::arg(d);
        if (k == 0) {
            prev_arg = a;
        } else {
            a = prev_arg + angle_diff(a, prev_arg);
            prev_arg = a;
        }
        out.v.push_back(cplx(std::log(m), a));
    }
    const double total = prev_arg + angle_diff(std::arg(pts[0] - center), prev_arg) - out.v[0].imag();
    const int winding = static_cast<int>(std::lround(total / kTwoPi));
    if (winding != expect_winding)
        throw std::invalid_argument("unwrapped_log: winding " + std::to_string(winding) +
                                    ", expected " + std::to_string(expect_winding));
    out.period_step = cplx(0.0, kTwoPi * winding);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Homeomorphism proxy: discrete orientation Jacobian on a parameter grid
// ---------------------------------------------------------------------------

struct HomeoCheck {
    bool ok = false;
    double min_jacobian = 0.0;
    std::string hint;
};

/// Signs of the discrete Jacobian of (u,v) -> C over an nu x nv cell grid.
/// Positive everywhere is the working proxy for orientation-preserving
/// injectivity of the constructed interpolations.
inline HomeoCheck check_homeomorphism_grid(const std::function<cplx(double, double)>& f,
                                           std::size_t nu = 256, std::size_t nv = 256,
                                           double u0 = 0.0, double u1 = 1.0, double v0 = 0.0,
                                           double v1 = 1.0) {
    HomeoCheck res;
    res.min_jacobian = std::numeric_limits<double>::infinity();
    std::vector<cplx> prev_row(nv + 1), row(nv + 1);
    for (std::size_t j = 0; j <= nv; ++j)
        prev_row[j] = f(u0, v0 + (v1 - v0) * static_cast<double>(j) / static_cast<double>(nv));
    for (std::size_t i = 1; i <= nu; ++i) {
        const double u = u0 + (u1 - u0) * static_cast<double>(i) / static_cast<double>(nu);
        for (std::size_t j = 0; j <= nv; ++j)
            row[j] = f(u, v0 + (v1 - v0) * static_cast<double>(j) / static_cast<double>(nv));
        for (std::size_t j = 0; j < nv; ++j) {
            const cplx du = row[j] - prev_row[j];
            const cplx dv = prev_row[j + 1] - prev_row[j];
            const double det = du.real() * dv.imag() - du.imag() * dv.real();
            res.min_jacobian = std::min(res.min_jacobian, det);
        }
        std::swap(prev_row, row);
    }
    res.ok = res.min_jacobian > 0.0;
    if (!res.ok) res.hint = "non-positive cell Jacobian; increase sample density or check boundary data";
    return res;
}

// ---------------------------------------------------------------------------
// Annulus interpolation: log-polar blend between two boundary correspondences
// ---------------------------------------------------------------------------

/// Quasiconformal-by-construction interpolation on a ring domain. The source
/// ring is either a circle pair (normalized to concentric circles) or a
/// star-shaped region between two radial graphs about a center. In the
/// normalized coordinates the map blends linearly in log-polar form:
///
///   out(t, theta) = c_tgt + exp( (1-t) * L_in(theta) + t * L_out(theta) )
///
/// where L_* are the unwrapped logarithms of the target boundary curves about
/// c_tgt and t is the radial modulus fraction. The relative winding sheet of
/// L_out against L_in is chosen to minimize total turning (ties: smallest
/// absolute rotation), which keeps the shear, and hence the distortion, low.
class AnnulusInterpolation {
public:
    /// Circle-pair source (concentric or eccentric).
    AnnulusInterpolation(const Disk& source_outer, const Disk& source_inner,
                         std::vector<cplx> inner_targets, std::vector<cplx> outer_targets)
        : n_(inner_targets.size()) {
        if (inner_targets.size() != outer_targets.size() || n_ < 16)
            throw std::invalid_argument("AnnulusInterpolation: need matching sample grids (>=16)");
        const auto norm = normalize_circle_pair(source_outer, source_inner);
        forward_ = norm.forward;
        log_rho_in_.v.assign(n_, std::log(norm.inner_radius));
        log_rho_out_.v.assign(n_, std::log(norm.outer_radius));
        log_rho_in_.period_step = 0.0;
        log_rho_out_.period_step = 0.0;
        c_src_ = cplx(0.0, 0.0);
        finish(std::move(inner_targets), std::move(outer_targets));
    }

    /// Star-shaped source: radial log-distances about c_src sampled on the
    /// uniform angle grid (same grid as the target samples).
    AnnulusInterpolation(const cplx& c_src, std::vector<double> source_log_rho_in,
                         std::vector<double> source_log_rho_out, std::vector<cplx> inner_targets,
                         std::vector<cplx> outer_targets)
        : n_(inner_targets.size()) {
        if (inner_targets.size() != outer_targets.size() ||
            source_log_rho_in.size() != n_ || source_log_rho_out.size() != n_ || n_ < 16)
            throw std::invalid_argument("AnnulusInterpolation: inconsistent sample grids");
        forward_ = Mobius::identity();
        c_src_ = c_src;
        log_rho_in_.v = std::move(source_log_rho_in);
        log_rho_out_.v = std::move(source_log_rho_out);
        log_rho_in_.period_step = 0.0;
        log_rho_out_.period_step = 0.0;
        for (std::size_t k = 0; k < n_; ++k)
            if (!(log_rho_in_.v[k] < log_rho_out_.v[k]))
                throw std::invalid_argument("AnnulusInterpolation: source radial graphs cross");
        finish(std::move(inner_targets), std::move(outer_targets));
    }

    std::size_t samples() const { return n_; }
    const cplx& target_center() const { return c_tgt_; }

    /// Map a source-domain point.
    cplx evaluate(const cplx& z) const {
        const cplx zeta = forward_.apply(z) - c_src_;
        const double theta = wrap_angle(std::arg(zeta));
        const double lr = std::log(std::abs(zeta));
        const double lin = log_rho_in_.eval(theta);
        const double lout = log_rho_out_.eval(theta);
        const double t = (lr - lin) / (lout - lin);
        return param_eval(t, theta);
    }

    /// Blend at explicit parameters (t in [0,1] radial, theta angular).
    cplx param_eval(double t, double theta) const {
        const cplx li = log_in_.eval(theta);
        const cplx lo = log_out_.eval(theta);
        return c_tgt_ + std::exp((1.0 - t) * li + t * lo);
    }

    /// Source point at parameters, for samplers and distortion grids.
    cplx source_point(double t, double theta) const {
        const double lr = (1.0 - t) * log_rho_in_.eval(theta) + t * log_rho_out_.eval(theta);
        const cplx zeta = c_src_ + std::polar(std::exp(lr), theta);
        return forward_.inverse().apply(zeta);
    }

    /// Max deviation from the prescribed boundary values at the sample grid.
    double boundary_error(const std::vector<cplx>& inner_targets,
                          const std::vector<cplx>& outer_targets) const {
        double worst = 0.0;
        for (std::size_t k = 0; k < n_; ++k) {
            const double theta = kTwoPi * static_cast<double>(k) / static_cast<double>(n_);
            worst = std::max(worst, std::abs(param_eval(0.0, theta) - inner_targets[k]));
            worst = std::max(worst, std::abs(param_eval(1.0, theta) - outer_targets[k]));
        }
        return worst;
    }

    HomeoCheck homeomorphism_check(std::size_t nu = 256, std::size_t nv = 256) const {
        return check_homeomorphism_grid(
            [this](double t, double theta) { return param_eval(t, theta * kTwoPi); }, nu, nv);
    }

private:
    void finish(std::vector<cplx> inner_targets, std::vector<cplx> outer_targets) {
        // Blend about the inner target curve's centroid.
        cplx c(0.0, 0.0);
        for (const auto& p : inner_targets) c += p;
        c_tgt_ = c / static_cast<double>(n_);

        log_in_ = detail::unwrapped_log(inner_targets, c_tgt_);
        log_out_ = detail::unwrapped_log(outer_targets, c_tgt_);

        // Nesting: the outer target must stay radially outside the inner one.
        for (std::size_t k = 0; k < n_; ++k)
            if (!(log_out_.v[k].real() > log_in_.v[k].real()))
                throw std::invalid_argument("AnnulusInterpolation: target curves cross or touch");

        // Choose the winding sheet of L_out minimizing total turning.
        double mean = 0.0;
        for (std::size_t k = 0; k < n_; ++k) mean += log_out_.v[k].imag() - log_in_.v[k].imag();
        mean /= static_cast<double>(n_);
        const long base = std::lround(-mean / kTwoPi);
        double best_sum = std::numeric_limits<double>::infinity();
        double best_rot = 0.0;
        long best_m = 0;
        for (long m = base - 1; m <= base + 1; ++m) {
            double sum = 0.0;
            for (std::size_t k = 0; k < n_; ++k)
                sum += std::abs(log_out_.v[k].imag() + kTwoPi * m - log_in_.v[k].imag());
            const double rot = std::abs(mean + kTwoPi * m);
            if (sum < best_sum - 1e-12 || (std::abs(sum - best_sum) <= 1e-12 && rot < best_rot)) {
                best_sum = sum;
                best_rot = rot;
                best_m = m;
            }
        }
        if (best_m != 0)
            for (auto& v : log_out_.v) v += cplx(0.0, kTwoPi * best_m);
    }

    std::size_t n_;
    Mobius forward_;
    cplx c_src_{0.0, 0.0};
    cplx c_tgt_{0.0, 0.0};
    detail::PeriodicSamples<double> log_rho_in_, log_rho_out_;
    detail::PeriodicSamples<cplx> log_in_, log_out_;
};

/// Builds the annulus interpolation from boundary correspondences given on
/// the two source circles. Correspondence angles are native to each circle;
/// they are resampled on the uniform angle grid of the normalized ring.
inline AnnulusInterpolation interpolate_ring(const Disk& source_outer, const Disk& source_inner,
                                             const BoundaryCorrespondence& inner_map,
                                             const BoundaryCorrespondence& outer_map,
                                             std::size_t n_grid = 512) {
    const auto norm = normalize_circle_pair(source_outer, source_inner);
    const Mobius inv = norm.forward.inverse();
    std::vector<cplx> inner_t(n_grid), outer_t(n_grid);
    for (std::size_t k = 0; k < n_grid; ++k) {
        const double theta = kTwoPi * static_cast<double>(k) / static_cast<double>(n_grid);
        const cplx p_in = inv.apply(std::polar(norm.inner_radius, theta));
        const cplx p_out = inv.apply(std::polar(norm.outer_radius, theta));
        inner_t[k] = inner_map.eval(std::arg(p_in - source_inner.center));
        outer_t[k] = outer_map.eval(std::arg(p_out - source_outer.center));
    }
    return AnnulusInterpolation(source_outer, source_inner, std::move(inner_t), std::move(outer_t));
}

// ---------------------------------------------------------------------------
// Distortion estimation (Beltrami coefficient by central differences)
// ---------------------------------------------------------------------------

struct DistortionReport {
    double sup_abs_mu = 0.0;
    double k_estimate = 1.0;  // (1 + sup|mu|) / (1 - sup|mu|)
    std::size_t n_samples = 0;
    std::size_t n_degenerate = 0;  // |f_z| below cutoff, excluded
    bool valid = false;            // sup|mu| < 1

    void absorb(double abs_mu) {
        sup_abs_mu = std::max(sup_abs_mu, abs_mu);
        ++n_samples;
    }

    void finalize() {
        valid = sup_abs_mu < 1.0;
        k_estimate = valid ? (1.0 + sup_abs_mu) / (1.0 - sup_abs_mu)
                           : std::numeric_limits<double>::infinity();
    }
};

inline DistortionReport merge_reports(DistortionReport a, const DistortionReport& b) {
    a.sup_abs_mu = std::max(a.sup_abs_mu, b.sup_abs_mu);
    a.n_samples += b.n_samples;
    a.n_degenerate += b.n_degenerate;
    a.finalize();
    return a;
}

/// Central finite differences for f_z and f_zbar; mu = f_zbar / f_z. The
/// step is relative (h * max(1,|z|)). Samples with |f_z| below 1e-12 are
/// excluded and counted.
inline DistortionReport beltrami_estimate(const PlanarMap& f, const std::vector<cplx>& samples,
                                          double h = 1e-5) {
    DistortionReport rep;
    for (const auto& z : samples) {
        const double step = h * std::max(1.0, std::abs(z));
        const cplx fx = (f(z + step) - f(z - step)) / (2.0 * step);
        const cplx fy = (f(z + cplx(0.0, step)) - f(z - cplx(0.0, step))) / (2.0 * step);
        const cplx fz = 0.5 * (fx - cplx(0.0, 1.0) * fy);
        const cplx fzb = 0.5 * (fx + cplx(0.0, 1.0) * fy);
        if (std::abs(fz) < 1e-12) {
            ++rep.n_degenerate;
            continue;
        }
        rep.absorb(std::abs(fzb / fz));
    }
    rep.finalize();
    return rep;
}

/// Distortion of an annulus interpolation sampled on an interior parameter
/// grid.
inline DistortionReport ring_distortion(const AnnulusInterpolation& ring, std::size_t nt = 8,
                                        std::size_t ntheta = 64, double h = 1e-5) {
    std::vector<cplx> samples;
    samples.reserve(nt * ntheta);
    for (std::size_t it = 1; it <= nt; ++it) {
        const double t = static_cast<double>(it) / static_cast<double>(nt + 1);
        for (std::size_t k = 0; k < ntheta; ++k)
            samples.push_back(ring.source_point(t, kTwoPi * static_cast<double>(k) / ntheta));
    }
    return beltrami_estimate([&](const cplx& z) { return ring.evaluate(z); }, samples, h);
}

// ---------------------------------------------------------------------------
// Transfinite (Coons) extension over a four-sided region
// ---------------------------------------------------------------------------

using SideFn = std::function<cplx(double)>;  // parameterized over [0,1]

struct SectorSides {
    SideFn bottom, top, left, right;  // bottom(u), top(u), left(v), right(v)
};

namespace detail {

inline cplx coons(const SectorSides& s, double u, double v) {
    const cplx p00 = s.bottom(0.0), p10 = s.bottom(1.0), p01 = s.top(0.0), p11 = s.top(1.0);
    return (1.0 - v) * s.bottom(u) + v * s.top(u) + (1.0 - u) * s.left(v) + u * s.right(v) -
           ((1.0 - u) * (1.0 - v) * p00 + u * (1.0 - v) * p10 + (1.0 - u) * v * p01 + u * v * p11);
}

}  // namespace detail

/// Coons-style transfinite blend between four boundary correspondences over a
/// circular-quadrilateral. Source and target live in caller-chosen charts
/// (identity, or log coordinates when the region winds around a center). The
/// source parameterization is inverted either analytically (when provided) or
/// by a damped Newton iteration on the source Coons patch.
class SectorPatch {
public:
    SectorPatch(SectorSides source_sides, SectorSides target_sides,
                std::function<cplx(cplx)> src_chart, std::function<cplx(cplx)> tgt_unchart,
                std::function<cplx(cplx)> analytic_uv = nullptr, double corner_tol = 1e-8)
        : src_(std::move(source_sides)),
          tgt_(std::move(target_sides)),
          chart_(std::move(src_chart)),
          unchart_(std::move(tgt_unchart)),
          analytic_uv_(std::move(analytic_uv)) {
        check_corners(src_, corner_tol, "source");
        check_corners(tgt_, corner_tol, "target");
    }

    /// Map a source point (in the original, un-charted coordinates).
    cplx evaluate(const cplx& z) const {
        const cplx w = chart_(z);
        const cplx uv = analytic_uv_ ? analytic_uv_(w) : invert_coons(w);
        return param_eval(uv.real(), uv.imag());
    }

    cplx param_eval(double u, double v) const { return unchart_(detail::coons(tgt_, u, v)); }

    cplx source_param(double u, double v) const { return detail::coons(src_, u, v); }

    HomeoCheck homeomorphism_check(std::size_t nu = 128, std::size_t nv = 128) const {
        return check_homeomorphism_grid(
            [this](double u, double v) { return param_eval(u, v); }, nu, nv);
    }

private:
    static void check_corners(const SectorSides& s, double tol, const char* which) {
        struct C { cplx a, b; const char* name; };
        const C corners[4] = {{s.bottom(0.0), s.left(0.0), "bottom-left"},
                              {s.bottom(1.0), s.right(0.0), "bottom-right"},
                              {s.top(0.0), s.left(1.0), "top-left"},
                              {s.top(1.0), s.right(1.0), "top-right"}};
        for (const auto& c : corners)
            if (std::abs(c.a - c.b) > tol)
                throw std::invalid_argument(std::string("SectorPatch: ") + which + " corner " +
                                            c.name + " mismatch " +
                                            std::to_string(std::abs(c.a - c.b)));
    }

    cplx invert_coons(const cplx& w) const {
        // coarse seed
        double bu = 0.5, bv = 0.5, best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 8; ++i)
            for (int j = 0; j <= 8; ++j) {
                const double u = i / 8.0, v = j / 8.0;
                const double d = std::abs(detail::coons(src_, u, v) - w);
                if (d < best) { best = d; bu = u; bv = v; }
            }
        double u = bu, v = bv;
        for (int iter = 0; iter < 40; ++iter) {
            const cplx F = detail::coons(src_, u, v) - w;
            if (std::abs(F) < 1e-12) break;
            const double h = 1e-6;
            const cplx Fu = (detail::coons(src_, u + h, v) - detail::coons(src_, u - h, v)) / (2 * h);
            const cplx Fv = (detail::coons(src_, u, v + h) - detail::coons(src_, u, v - h)) / (2 * h);
            const double det = Fu.real() * Fv.imag() - Fu.imag() * Fv.real();
            if (std::abs(det) < 1e-14) break;
            double du = (-F.real() * Fv.imag() + F.imag() * Fv.real()) / det;
            double dv = (-Fu.real() * F.imag() + Fu.imag() * F.real()) / det;
            const double cap = 0.5;
            du = std::clamp(du, -cap, cap);
            dv = std::clamp(dv, -cap, cap);
            u = std::clamp(u + du, -0.25, 1.25);
            v = std::clamp(v + dv, -0.25, 1.25);
        }
        return cplx(u, v);
    }

    SectorSides src_, tgt_;
    std::function<cplx(cplx)> chart_, unchart_;
    std::function<cplx(cplx)> analytic_uv_;
};

/// Convenience wrapper matching the operation name: builds the patch with
/// identity charts and Newton parameter inversion.
inline SectorPatch extend_sector(const SectorSides& source_sides, const SectorSides& target_sides,
                                 double corner_tol = 1e-8) {
    auto id = [](cplx z) { return z; };
    return SectorPatch(source_sides, target_sides, id, id, nullptr, corner_tol);
}

}  // namespace ifsjulia
