#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "ifsjulia/geometry.hpp"
#include "ifsjulia/grid.hpp"
#include "ifsjulia/ifs.hpp"
#include "ifsjulia/qc.hpp"
#include "ifsjulia/rng.hpp"
#include "ifsjulia/semigroup.hpp"

namespace ifsjulia {

inline cplx pow_int(cplx z, std::size_t m) {
    cplx r(1.0, 0.0);
    while (m) {
        if (m & 1) r *= z;
        z *= z;
        m >>= 1;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Strong disk open set condition
// ---------------------------------------------------------------------------

struct OSCReport {
    bool passes = false;
    std::vector<std::vector<double>> gaps;  // pairwise gaps of image-disk closures
    std::vector<double> margins;            // 1 - (|b_i| + |a_i|)
    std::string failure;

    double min_gap() const {
        double g = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < gaps.size(); ++i)
            for (std::size_t j = i + 1; j < gaps.size(); ++j) g = std::min(g, gaps[i][j]);
        return g;
    }
    double min_margin() const {
        double m = std::numeric_limits<double>::infinity();
        for (double v : margins) m = std::min(m, v);
        return m;
    }
};

/// Image disks must have pairwise-disjoint closures contained in the open
/// unit disk. Single-map systems pass vacuously on the pair condition.
inline OSCReport check_strong_disk_osc(const ConformalIFS& ifs) {
    require_valid(ifs);
    const std::size_t m = ifs.maps.size();
    OSCReport rep;
    rep.passes = true;
    rep.gaps.assign(m, std::vector<double>(m, 0.0));
    std::vector<Disk> imgs;
    for (const auto& f : ifs.maps) imgs.push_back(f.image_disk(unit_disk()));
    for (std::size_t i = 0; i < m; ++i) {
        const double margin = 1.0 - (std::abs(ifs.maps[i].b) + std::abs(ifs.maps[i].a));
        rep.margins.push_back(margin);
        if (!(margin > 0.0)) {
            rep.passes = false;
            rep.failure = "image disk " + std::to_string(i) + " not compactly inside the unit disk";
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            rep.gaps[i][j] = disk_gap(imgs[i], imgs[j]);
            if (i < j && !(rep.gaps[i][j] > 0.0)) {
                rep.passes = false;
                rep.failure = "image disks " + std::to_string(i) + "," + std::to_string(j) +
                              " have intersecting closures";
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Plan: all the constructive geometry of the build
// ---------------------------------------------------------------------------

/// One transport hop: translate the eps-disk from `from` to `to` inside the
/// carrier disk, identity outside it.
struct PushHop {
    Disk carrier;
    cplx from, to;
};

struct UqrPlan {
    ConformalIFS ifs;
    std::size_t m = 0;
    double eps = 0.0;            // effective value (may be below the request)
    double requested_eps = 0.0;
    std::vector<Disk> E;         // image disks phi_i(unit disk)
    std::vector<Disk> D;         // inflated disks around E_i
    std::vector<Disk> G;         // outer boundaries of the rings R_i = G_i \ D_i
    std::vector<cplx> w;         // centers of E_i (targets of the conformal squeeze)
    std::vector<cplx> v;         // assigned root-of-unity targets (1-2eps)*omega
    std::vector<std::vector<PushHop>> pushes;  // per index, executed in index order
    std::vector<cplx> ring_inner_curve;        // traced image of the eps-disks under z^m
    cplx ring_inner_center{0.0, 0.0};          // (1-2eps)^m
    std::vector<std::vector<double>> geodesic_theta;  // per seam: theta(x) over uniform x in [0, log 2]
    double gamma_lo = 2.0, gamma_hi = 4.0;            // the slit segment [2, 2^m]
};

namespace uqr_detail {

/// Hyperbolic geodesic of the annulus {1 < |z| < 2} joining a point of the
/// inner circle at angle theta_in to a point of the outer circle at angle
/// theta_out, computed in the universal cover (lifted to a half-plane
/// semicircle). Returned as theta(x) samples over the uniform x = log|z|
/// grid; a radially aligned pair degenerates to the constant graph.
inline std::vector<double> annulus_geodesic(double theta_in, double theta_out, std::size_t n) {
    const double L = std::log(2.0);
    const double y_in = theta_in;
    const double y_out = theta_in + angle_diff(theta_out, theta_in);
    const double u_in = std::exp(-kPi * y_in / L);
    const double u_out = -std::exp(-kPi * y_out / L);
    const double c = 0.5 * (u_in + u_out);
    const double rho = 0.5 * (u_in - u_out);
    std::vector<double> theta(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double phi = kPi * static_cast<double>(k) / static_cast<double>(n - 1);
        const double mod = std::abs(c + rho * std::polar(1.0, phi));
        theta[k] = -(L / kPi) * std::log(mod);
    }
    theta.front() = y_in;   // exact anchors
    theta.back() = y_out;
    return theta;
}

inline double eval_graph(const std::vector<double>& g, double x, double L) {
    const double u = std::clamp(x / L, 0.0, 1.0) * static_cast<double>(g.size() - 1);
    std::size_t k = static_cast<std::size_t>(u);
    if (k + 1 >= g.size()) k = g.size() - 2;
    const double f = u - static_cast<double>(k);
    return g[k] + f * (g[k + 1] - g[k]);
}

/// Euclidean arc length table of the geodesic graph, normalized to [0,1].
inline std::vector<double> arclength_fractions(const std::vector<double>& g, double L) {
    const std::size_t n = g.size();
    std::vector<double> s(n, 0.0);
    cplx prev = std::exp(cplx(0.0, g[0]));
    for (std::size_t k = 1; k < n; ++k) {
        const double x = L * static_cast<double>(k) / static_cast<double>(n - 1);
        const cplx cur = std::exp(cplx(x, g[k]));
        s[k] = s[k - 1] + std::abs(cur - prev);
        prev = cur;
    }
    for (auto& v : s) v /= s.back();
    return s;
}

/// Radial log-distance samples of a star-shaped closed polyline about a
/// center, on the uniform angle grid.
inline std::vector<double> star_log_radius(const std::vector<cplx>& poly, const cplx& center,
                                           std::size_t n) {
    const std::size_t np = poly.size();
    std::vector<double> ang(np + 1), lr(np + 1);
    double prev = std::arg(poly[0] - center);
    ang[0] = prev;
    lr[0] = std::log(std::abs(poly[0] - center));
    for (std::size_t j = 1; j < np; ++j) {
        const cplx d = poly[j] - center;
        prev += angle_diff(std::arg(d), prev);
        ang[j] = prev;
        lr[j] = std::log(std::abs(d));
        if (!(ang[j] > ang[j - 1]))
            throw std::invalid_argument("star_log_radius: polyline not star-shaped about center");
    }
    ang[np] = ang[0] + kTwoPi;
    lr[np] = lr[0];
    if (std::abs((prev + angle_diff(std::arg(poly[0] - center), prev)) - ang[np]) > 1e-6)
        throw std::invalid_argument("star_log_radius: winding about center is not 1");

    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        double theta = ang[0] + kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        auto it = std::upper_bound(ang.begin(), ang.end(), theta);
        std::size_t hi = static_cast<std::size_t>(it - ang.begin());
        if (hi == 0) hi = 1;
        if (hi > np) hi = np;
        const double f = (theta - ang[hi - 1]) / (ang[hi] - ang[hi - 1]);
        const double val = lr[hi - 1] + f * (lr[hi] - lr[hi - 1]);
        // store at the wrapped grid slot of theta
        const double wrapped = wrap_angle(theta);
        const std::size_t slot =
            static_cast<std::size_t>(std::lround(wrapped / kTwoPi * static_cast<double>(n))) % n;
        out[slot] = val;
    }
    return out;
}

struct RouteResult {
    bool ok = false;
    std::vector<PushHop> hops;
    std::string blocker;
};

inline bool carrier_valid(const Disk& carrier, const std::vector<Disk>& obstacles, double eps) {
    if (std::abs(carrier.center) + carrier.radius > 1.0 - 0.25 * eps) return false;
    for (const auto& o : obstacles)
        if (!(disk_gap(carrier, o) > 0.0)) return false;
    return true;
}

inline std::optional<PushHop> straight_hop(const cplx& from, const cplx& to, double eps,
                                           const std::vector<Disk>& obstacles) {
    const double len = std::abs(to - from);
    const Disk carrier(0.5 * (from + to), 0.5 * len + 1.5 * eps);
    if (!carrier_valid(carrier, obstacles, eps)) return std::nullopt;
    return PushHop{carrier, from, to};
}

inline RouteResult route_disk(const cplx& from, const cplx& to, double eps,
                              const std::vector<Disk>& obstacles, bool allow_detour) {
    RouteResult res;
    if (std::abs(to - from) < 1e-15) {
        res.ok = true;
        return res;
    }
    if (auto hop = straight_hop(from, to, eps, obstacles)) {
        res.ok = true;
        res.hops.push_back(*hop);
        return res;
    }
    if (allow_detour) {
        const cplx dir = (to - from) / std::abs(to - from);
        const cplx perp = dir * cplx(0.0, 1.0);
        const double len = std::abs(to - from);
        const double scale = std::max(len, 4.0 * eps);
        for (double s : {0.35, -0.35, 0.6, -0.6, 0.9, -0.9, 1.25, -1.25}) {
            const cplx wp = 0.5 * (from + to) + perp * (s * scale);
            auto h1 = straight_hop(from, wp, eps, obstacles);
            auto h2 = straight_hop(wp, to, eps, obstacles);
            if (h1 && h2) {
                res.ok = true;
                res.hops.push_back(*h1);
                res.hops.push_back(*h2);
                return res;
            }
        }
        // short legs around the blockage: the covering disk of a single long
        // leg bulges back over mid-path obstacles, three hops stay clear
        for (double s : {0.45, -0.45, 0.6, -0.6, 0.8, -0.8}) {
            const cplx lift = perp * (s * scale);
            const cplx wp1 = from + 0.25 * (to - from) + lift;
            const cplx wp2 = to - 0.25 * (to - from) + lift;
            auto h1 = straight_hop(from, wp1, eps, obstacles);
            auto h2 = straight_hop(wp1, wp2, eps, obstacles);
            auto h3 = straight_hop(wp2, to, eps, obstacles);
            if (h1 && h2 && h3) {
                res.ok = true;
                res.hops.push_back(*h1);
                res.hops.push_back(*h2);
                res.hops.push_back(*h3);
                return res;
            }
        }
    }
    res.blocker = "no collision-free carrier from (" + std::to_string(from.real()) + "," +
                  std::to_string(from.imag()) + ") to (" + std::to_string(to.real()) + "," +
                  std::to_string(to.imag()) + ")";
    return res;
}

/// Routes every disk to its assigned target in index order; obstacles are the
/// other disks at their current positions.
inline bool route_all(const std::vector<cplx>& w, const std::vector<cplx>& targets, double eps,
                      bool allow_detour, std::vector<std::vector<PushHop>>& out,
                      std::string& blocker) {
    const std::size_t m = w.size();
    std::vector<cplx> pos = w;
    out.assign(m, {});
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<Disk> obstacles;
        for (std::size_t k = 0; k < m; ++k)
            if (k != i) obstacles.emplace_back(pos[k], eps);
        auto r = route_disk(pos[i], targets[i], eps, obstacles, allow_detour);
        if (!r.ok) {
            blocker = "transport of disk " + std::to_string(i) + ": " + r.blocker;
            return false;
        }
        out[i] = std::move(r.hops);
        pos[i] = targets[i];
    }
    return true;
}

inline std::vector<std::vector<std::size_t>> permutations_by_cost(const std::vector<cplx>& w,
                                                                  const std::vector<cplx>& u) {
    const std::size_t m = w.size();
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::pair<double, std::vector<std::size_t>>> all;
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < m; ++i) cost += std::abs(w[i] - u[perm[i]]);
        all.emplace_back(cost, perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::vector<std::size_t>> out;
    for (auto& p : all) out.push_back(std::move(p.second));
    return out;
}

}  // namespace uqr_detail

/// Builds the constructive plan: inflates the image disks, assigns and
/// transports the eps-disks to the scaled roots of unity (relabelling, then
/// shrinking eps, then detouring when the straight carrier is blocked),
/// traces the inner boundary of the power-map ring, and lays out the
/// geodesic sector seams of the final interpolation.
inline UqrPlan plan_uqr(const ConformalIFS& ifs, double eps) {
    const auto osc = check_strong_disk_osc(ifs);
    if (!osc.passes)
        throw std::invalid_argument("plan_uqr: strong disk open set condition fails: " +
                                    osc.failure);
    const std::size_t m = ifs.maps.size();
    if (m < 2) throw std::invalid_argument("plan_uqr: need at least two maps (degree >= 2)");
    if (m > 6) throw std::invalid_argument("plan_uqr: assignment search caps at 6 maps");

    UqrPlan plan;
    plan.ifs = ifs;
    plan.m = m;
    plan.requested_eps = eps;

    for (const auto& f : ifs.maps) plan.E.push_back(f.image_disk(unit_disk()));
    const double gap_min = osc.min_gap();
    const double margin_min = osc.min_margin();
    double r_min = std::numeric_limits<double>::infinity();
    for (const auto& e : plan.E) r_min = std::min(r_min, e.radius);

    struct CapTerm { double value; const char* name; };
    const CapTerm terms[] = {{gap_min / 8.0, "gap/8"},
                             {margin_min / 4.0, "margin/4"},
                             {r_min / 2.0, "image_radius/2"},
                             {0.1, "absolute"}};
    const CapTerm* cap = &terms[0];
    for (const auto& t : terms)
        if (t.value < cap->value) cap = &t;
    if (!(eps > 0.0) || eps > cap->value)
        throw std::invalid_argument("plan_uqr: eps " + std::to_string(eps) +
                                    " outside (0, " + std::to_string(cap->value) +
                                    "]; binding constraint: " + std::string(cap->name));

    // squeeze-stage geometry: D_i takes a quarter of the locally usable
    // slack, the ring outer boundary another eighth of the global gap.
    for (std::size_t i = 0; i < m; ++i) {
        double local_gap = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) local_gap = std::min(local_gap, osc.gaps[i][j]);
        const double slack = std::min(local_gap, osc.margins[i]);
        plan.D.emplace_back(plan.E[i].center, plan.E[i].radius + 0.25 * slack);
        plan.G.emplace_back(plan.E[i].center, plan.D[i].radius + gap_min / 8.0);
        plan.w.push_back(plan.E[i].center);
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(plan.G[i].center) + plan.G[i].radius >= 1.0)
            throw std::logic_error("plan_uqr: ring " + std::to_string(i) + " exits the unit disk");
        for (std::size_t j = i + 1; j < m; ++j)
            if (!(disk_gap(plan.G[i], plan.G[j]) > 0.0))
                throw std::logic_error("plan_uqr: rings " + std::to_string(i) + "," +
                                       std::to_string(j) + " collide");
        for (std::size_t j = 0; j < m; ++j)
            if (j != i && !(disk_gap(plan.D[i], plan.E[j]) > 0.0))
                throw std::logic_error("plan_uqr: D disk swallows a foreign image disk");
    }

    // transport stage: assignment, then carriers. When a straight carrier
    // is blocked: relabel, reduce eps, then detour around the blocking disk,
    // in that order.
    double eps_eff = eps;
    std::string blocker;
    bool routed = false;
    for (int shrink = 0; shrink < 3 && !routed; ++shrink) {
        std::vector<cplx> targets(m);
        for (std::size_t k = 0; k < m; ++k)
            targets[k] = (1.0 - 2.0 * eps_eff) * std::polar(1.0, kTwoPi * static_cast<double>(k) / m);
        for (const auto& perm : uqr_detail::permutations_by_cost(plan.w, targets)) {
            std::vector<cplx> assigned(m);
            for (std::size_t i = 0; i < m; ++i) assigned[i] = targets[perm[i]];
            if (uqr_detail::route_all(plan.w, assigned, eps_eff, false, plan.pushes, blocker)) {
                plan.v = assigned;
                routed = true;
                break;
            }
        }
        if (!routed) eps_eff *= 0.5;
    }
    if (!routed) {
        eps_eff = eps;
        std::vector<cplx> targets(m);
        for (std::size_t k = 0; k < m; ++k)
            targets[k] = (1.0 - 2.0 * eps_eff) * std::polar(1.0, kTwoPi * static_cast<double>(k) / m);
        const auto perms = uqr_detail::permutations_by_cost(plan.w, targets);
        std::vector<cplx> assigned(m);
        for (std::size_t i = 0; i < m; ++i) assigned[i] = targets[perms[0][i]];
        if (uqr_detail::route_all(plan.w, assigned, eps_eff, true, plan.pushes, blocker)) {
            plan.v = assigned;
            routed = true;
        }
    }
    if (!routed) throw std::invalid_argument("plan_uqr: " + blocker);
    plan.eps = eps_eff;

    // eps-disk invariants at the targets
    for (std::size_t i = 0; i < m; ++i) {
        if (!(plan.eps < plan.E[i].radius))
            throw std::logic_error("plan_uqr: eps-disk exceeds image disk " + std::to_string(i));
        if (std::abs(plan.v[i]) + plan.eps >= 1.0)
            throw std::logic_error("plan_uqr: target eps-disk exits the unit disk");
        for (std::size_t j = i + 1; j < m; ++j)
            if (!(std::abs(plan.v[i] - plan.v[j]) > 2.0 * plan.eps))
                throw std::logic_error("plan_uqr: target eps-disks intersect");
    }

    // the ring image of the power map: all eps-disk boundaries map onto
    // one and the same curve around (1-2eps)^m.
    const double base = 1.0 - 2.0 * plan.eps;
    plan.ring_inner_center = pow_int(cplx(base, 0.0), m);
    const std::size_t n_trace = 2048;
    plan.ring_inner_curve.reserve(n_trace);
    for (std::size_t k = 0; k < n_trace; ++k) {
        const double phi = kTwoPi * static_cast<double>(k) / static_cast<double>(n_trace);
        plan.ring_inner_curve.push_back(
            pow_int(cplx(base, 0.0) + plan.eps * std::polar(1.0, phi), m));
    }
    for (std::size_t i = 0; i < m; ++i) {
        const cplx probe = pow_int(plan.v[i] + plan.eps * std::polar(1.0, 0.7), m);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : plan.ring_inner_curve) best = std::min(best, std::abs(p - probe));
        if (best > 1e-3)
            throw std::logic_error("plan_uqr: eps-disk images under z^m do not coincide");
    }

    // sector seams: geodesics anchored at the roots of unity (the
    // preimages of the slit endpoints); radially aligned anchors give radial
    // segments.
    const std::size_t n_geo = 129;
    for (std::size_t k = 0; k < m; ++k) {
        const double theta = kTwoPi * static_cast<double>(k) / static_cast<double>(m);
        plan.geodesic_theta.push_back(uqr_detail::annulus_geodesic(theta, theta, n_geo));
    }
    plan.gamma_hi = std::pow(2.0, static_cast<double>(m));
    return plan;
}

// ---------------------------------------------------------------------------
// The assembled map
// ---------------------------------------------------------------------------

enum class UqrPiece { Conformal, DiskRing, Core, Sector, Power };

/// Grammar level of a piece along an escaping orbit: conformal* ->
/// (disk-ring or core) <=1 -> sector <=1 -> power forever.
inline int uqr_piece_level(UqrPiece p) {
    switch (p) {
        case UqrPiece::Conformal: return 0;
        case UqrPiece::DiskRing:
        case UqrPiece::Core: return 1;
        case UqrPiece::Sector: return 2;
        case UqrPiece::Power: return 3;
    }
    return 3;
}

struct UqrValue {
    cplx value;
    UqrPiece piece;
};

class UqrMap {
public:
    explicit UqrMap(UqrPlan plan) : plan_(std::move(plan)) { build(); }

    const UqrPlan& plan() const { return plan_; }
    std::size_t degree() const { return plan_.m; }

    UqrValue evaluate(const cplx& z) const {
        const double az = std::abs(z);
        if (az >= 2.0) return {pow_int(z, plan_.m), UqrPiece::Power};
        if (az > 1.0) return {sector_value(z), UqrPiece::Sector};
        for (std::size_t i = 0; i < plan_.m; ++i)
            if (plan_.E[i].contains(z))
                return {plan_.ifs.maps[i].apply_inverse(z), UqrPiece::Conformal};
        for (std::size_t i = 0; i < plan_.m; ++i)
            if (plan_.D[i].contains(z)) return {d_rings_[i].evaluate(z), UqrPiece::DiskRing};
        return {core(z), UqrPiece::Core};
    }

    /// Squeeze stage: each D_i contracts conformally onto its eps-disk,
    /// identity off the rings.
    cplx h1(const cplx& z) const {
        for (std::size_t i = 0; i < plan_.m; ++i)
            if (plan_.G[i].contains(z)) return g_rings_[i].evaluate(z);
        return z;
    }

    /// Transport stage: the hop composition, first index first.
    cplx h2(cplx z) const {
        for (std::size_t i = 0; i < plan_.m; ++i) {
            for (std::size_t h = 0; h < plan_.pushes[i].size(); ++h) {
                const auto& hop = plan_.pushes[i][h];
                if (std::abs(z - hop.from) <= plan_.eps)
                    z += hop.to - hop.from;
                else if (hop.carrier.contains(z))
                    z = push_rings_[i][h].eval(z);
            }
        }
        return z;
    }

    cplx h3(const cplx& z) const { return pow_int(z, plan_.m); }

    cplx h4(const cplx& z) const { return h4_->evaluate(z); }

    cplx core(const cplx& z) const { return h4(h3(h2(h1(z)))); }

    const AnnulusInterpolation& d_ring(std::size_t i) const { return d_rings_[i]; }
    const AnnulusInterpolation& g_ring(std::size_t i) const { return g_rings_[i]; }
    const AnnulusInterpolation& ring_h4() const { return *h4_; }
    const SectorPatch& sector(std::size_t i) const { return sectors_[i]; }

    /// Angle function of sector seam k at radial position x = log|z|.
    double seam_theta(std::size_t k, double x) const {
        const auto& g = plan_.geodesic_theta[k % plan_.m];
        double th = uqr_detail::eval_graph(g, x, std::log(2.0));
        if (k >= plan_.m) th += kTwoPi;
        return th;
    }

    /// Region decisions taken while evaluating at z, appended to sig. Finite
    /// difference stencils must share the whole signature to sample a smooth
    /// composition (piece dispatch and the transport sub-pieces all kink the
    /// derivative).
    void dispatch_signature(const cplx& z, std::vector<int>& sig) const {
        const double az = std::abs(z);
        if (az >= 2.0) {
            sig.push_back(400);
            return;
        }
        if (az > 1.0) {
            sig.push_back(300 + static_cast<int>(sector_index(z)));
            return;
        }
        for (std::size_t i = 0; i < plan_.m; ++i)
            if (plan_.E[i].contains(z)) {
                sig.push_back(100 + static_cast<int>(i));
                return;
            }
        for (std::size_t i = 0; i < plan_.m; ++i)
            if (plan_.D[i].contains(z)) {
                sig.push_back(200 + static_cast<int>(i));
                return;
            }
        sig.push_back(0);
        int g = -1;
        for (std::size_t i = 0; i < plan_.m; ++i)
            if (plan_.G[i].contains(z)) g = static_cast<int>(i);
        sig.push_back(g);
        cplx w = (g >= 0) ? g_rings_[static_cast<std::size_t>(g)].evaluate(z) : z;
        for (std::size_t i = 0; i < plan_.m; ++i)
            for (std::size_t h = 0; h < plan_.pushes[i].size(); ++h) {
                const auto& hop = plan_.pushes[i][h];
                if (std::abs(w - hop.from) <= plan_.eps) {
                    sig.push_back(1);
                    w += hop.to - hop.from;
                } else if (hop.carrier.contains(w)) {
                    sig.push_back(2);
                    w = push_rings_[i][h].eval(w);
                } else {
                    sig.push_back(0);
                }
            }
    }

private:
    std::size_t sector_index(const cplx& z) const {
        const double x = std::log(std::abs(z));
        const double a = std::arg(z);
        for (std::size_t i = 0; i < plan_.m; ++i) {
            const double lo = seam_theta(i, x);
            const double hi = seam_theta(i + 1, x);
            const double mid = 0.5 * (lo + hi);
            const double y = a + kTwoPi * std::round((mid - a) / kTwoPi);
            if (y >= lo - 1e-12 && y <= hi + 1e-12) return i;
        }
        // numerical corner fallback: nearest angular bin
        return static_cast<std::size_t>(wrap_angle(a) / kTwoPi * static_cast<double>(plan_.m)) %
               plan_.m;
    }

    cplx sector_value(const cplx& z) const { return sectors_[sector_index(z)].evaluate(z); }

    void build() {
        const std::size_t n = 8192;
        const std::size_t m = plan_.m;

        // squeeze rings on G_i \ D_i: identity outside, down to the
        // eps-disk inside.
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<cplx> inner_t(n), outer_t(n);
            for (std::size_t k = 0; k < n; ++k) {
                const double th = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
                inner_t[k] = plan_.w[i] + plan_.eps * std::polar(1.0, th);
                outer_t[k] = plan_.G[i].boundary_point(th);
            }
            g_rings_.emplace_back(plan_.G[i], plan_.D[i], std::move(inner_t), std::move(outer_t));
        }

        // transport hops: identity on the carrier boundary, translation
        // on the moving disk. The blend runs between the
        // concentric frames of the source ring (F, B(from,eps)) and of the
        // target ring (F, B(to,eps)); intermediate curves are then round
        // circles and the hop map is a homeomorphism by construction.
        push_rings_.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            for (const auto& hop : plan_.pushes[i]) {
                const Disk src_inner(hop.from, plan_.eps);
                const Disk tgt_inner(hop.to, plan_.eps);
                const auto ns = normalize_circle_pair(hop.carrier, src_inner);
                const auto nt = normalize_circle_pair(hop.carrier, tgt_inner);
                const Mobius ns_inv = ns.forward.inverse();
                std::vector<cplx> inner_t(n), outer_t(n);
                const cplx shift = hop.to - hop.from;
                for (std::size_t k = 0; k < n; ++k) {
                    const double th = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
                    inner_t[k] =
                        nt.forward.apply(ns_inv.apply(std::polar(ns.inner_radius, th)) + shift);
                    outer_t[k] = nt.forward.apply(ns_inv.apply(std::polar(ns.outer_radius, th)));
                }
                push_rings_[i].push_back(
                    {AnnulusInterpolation(hop.carrier, src_inner, std::move(inner_t),
                                          std::move(outer_t)),
                     nt.forward.inverse()});
            }
        }

        // flatten stage: the ring R between the traced curve and the unit
        // circle maps onto {3/2 < |z| < 2}; the unit circle goes to |z| = 2
        // as 2z.
        {
            const cplx c = plan_.ring_inner_center;
            std::vector<double> lr_in =
                uqr_detail::star_log_radius(plan_.ring_inner_curve, c, n);
            std::vector<double> lr_out(n);
            std::vector<cplx> inner_t(n), outer_t(n);
            for (std::size_t k = 0; k < n; ++k) {
                const double th = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
                const cplx e = std::polar(1.0, th);
                const double beta = c.real() * e.real() + c.imag() * e.imag();
                const double rho = -beta + std::sqrt(beta * beta + 1.0 - std::norm(c));
                lr_out[k] = std::log(rho);
                inner_t[k] = 1.5 * e;
                outer_t[k] = 2.0 * (c + rho * e);
            }
            h4_.emplace(c, std::move(lr_in), std::move(lr_out), std::move(inner_t),
                        std::move(outer_t));
        }

        // D_i \ E_i rings: inverse branch on the inside, the assembled
        // core's trace on the outside.
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<cplx> inner_t(n), outer_t(n);
            for (std::size_t k = 0; k < n; ++k) {
                const double th = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
                inner_t[k] = plan_.ifs.maps[i].apply_inverse(plan_.E[i].boundary_point(th));
                outer_t[k] = core(plan_.D[i].boundary_point(th));
            }
            d_rings_.emplace_back(plan_.D[i], plan_.E[i], std::move(inner_t), std::move(outer_t));
        }

        // sectors: log source chart with analytic rectangle coordinates,
        // log target chart onto the slit annulus sheet.
        const double L = std::log(2.0);
        const double span = plan_.gamma_hi - plan_.gamma_lo;
        for (std::size_t i = 0; i < m; ++i) {
            const auto g_lo = plan_.geodesic_theta[i];
            auto g_hi = plan_.geodesic_theta[(i + 1) % m];
            if (i + 1 == m)
                for (auto& t : g_hi) t += kTwoPi;
            const auto s_lo = uqr_detail::arclength_fractions(g_lo, L);
            const auto s_hi = uqr_detail::arclength_fractions(g_hi, L);
            const double sheet_lo = kTwoPi * static_cast<double>(i);
            const double sheet_hi = kTwoPi * (static_cast<double>(i) + 1.0);

            SectorSides src;
            src.bottom = [g_lo, L](double u) {
                return cplx(u * L, uqr_detail::eval_graph(g_lo, u * L, L));
            };
            src.top = [g_hi, L](double u) {
                return cplx(u * L, uqr_detail::eval_graph(g_hi, u * L, L));
            };
            src.left = [g_lo, g_hi](double v) {
                return cplx(0.0, g_lo.front() + v * (g_hi.front() - g_lo.front()));
            };
            src.right = [g_lo, g_hi, L](double v) {
                return cplx(L, g_lo.back() + v * (g_hi.back() - g_lo.back()));
            };

            const double lo_val = plan_.gamma_lo;
            SectorSides tgt;
            tgt.bottom = [s_lo, L, lo_val, span, sheet_lo](double u) {
                const double s = uqr_detail::eval_graph(s_lo, u * L, L);
                return cplx(std::log(lo_val + s * span), sheet_lo);
            };
            tgt.top = [s_hi, L, lo_val, span, sheet_hi](double u) {
                const double s = uqr_detail::eval_graph(s_hi, u * L, L);
                return cplx(std::log(lo_val + s * span), sheet_hi);
            };
            tgt.left = [sheet_lo](double v) {
                return cplx(std::log(2.0), sheet_lo + v * kTwoPi);
            };
            const std::size_t deg = m;
            tgt.right = [sheet_lo, deg](double v) {
                return cplx(static_cast<double>(deg) * std::log(2.0), sheet_lo + v * kTwoPi);
            };

            const double mid0 = 0.5 * (g_lo.front() + g_hi.front());
            auto chart = [mid0](cplx z) {
                const double a = std::arg(z);
                return cplx(std::log(std::abs(z)), a + kTwoPi * std::round((mid0 - a) / kTwoPi));
            };
            auto unchart = [](cplx w) { return std::exp(w); };
            auto uv = [g_lo, g_hi, L](cplx w) {
                const double x = std::clamp(w.real(), 0.0, L);
                const double ylo = uqr_detail::eval_graph(g_lo, x, L);
                const double yhi = uqr_detail::eval_graph(g_hi, x, L);
                return cplx(x / L, (w.imag() - ylo) / (yhi - ylo));
            };
            sectors_.emplace_back(src, tgt, chart, unchart, uv);
        }
    }

    // transport blend expressed in the target ring's concentric frame
    struct PushPiece {
        AnnulusInterpolation blend;
        Mobius unframe;
        cplx eval(const cplx& z) const { return unframe.apply(blend.evaluate(z)); }
    };

    UqrPlan plan_;
    std::vector<AnnulusInterpolation> g_rings_;
    std::vector<std::vector<PushPiece>> push_rings_;
    std::optional<AnnulusInterpolation> h4_;
    std::vector<AnnulusInterpolation> d_rings_;
    std::vector<SectorPatch> sectors_;
};

inline UqrMap build_uqr(const UqrPlan& plan) { return UqrMap(plan); }

// ---------------------------------------------------------------------------
// Seam audit across every adjacent piece pair
// ---------------------------------------------------------------------------

inline SeamReport audit_uqr_seams(const UqrMap& f, std::size_t n = 512) {
    SeamReport rep;
    const auto& plan = f.plan();
    auto record = [&](double d, const std::string& name) {
        if (d > rep.worst) {
            rep.worst = d;
            rep.worst_seam = name;
        }
    };
    auto circle_seam = [&](const Disk& seam, const PlanarMap& a, const PlanarMap& b,
                           const std::string& name) {
        for (std::size_t k = 0; k < n; ++k) {
            const cplx z = seam.boundary_point(kTwoPi * static_cast<double>(k) / n);
            record(std::abs(a(z) - b(z)), name);
        }
    };
    for (std::size_t i = 0; i < plan.m; ++i) {
        const std::string si = std::to_string(i);
        circle_seam(plan.E[i],
                    [&](const cplx& z) { return plan.ifs.maps[i].apply_inverse(z); },
                    [&](const cplx& z) { return f.d_ring(i).evaluate(z); }, "E" + si);
        circle_seam(plan.D[i], [&](const cplx& z) { return f.d_ring(i).evaluate(z); },
                    [&](const cplx& z) { return f.core(z); }, "D" + si);
        circle_seam(plan.G[i], [&](const cplx& z) { return f.g_ring(i).evaluate(z); },
                    [&](const cplx& z) { return z; }, "G" + si);
    }
    // core vs sectors on |z| = 1, sectors vs power map on |z| = 2
    for (std::size_t k = 0; k < n; ++k) {
        const double th = kTwoPi * static_cast<double>(k) / n;
        const cplx zi = std::polar(1.0, th);
        record(std::abs(f.core(zi) - f.evaluate(zi * 1.0000000001).value), "unit_circle");
        const cplx zo = std::polar(2.0, th);
        record(std::abs(f.evaluate(zo * 0.9999999999).value - pow_int(zo, plan.m)),
               "outer_circle");
    }
    // sector/sector seams along the geodesics
    const double L = std::log(2.0);
    for (std::size_t i = 0; i < plan.m; ++i) {
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const double x = L * static_cast<double>(k) / n;
            const double th = f.seam_theta(i, x);
            const cplx z = std::exp(cplx(x, th));
            const cplx left = f.sector(i).evaluate(z);
            const cplx right = f.sector((i + plan.m - 1) % plan.m).evaluate(z);
            record(std::abs(left - right), "sigma" + std::to_string(i));
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Verification: escape-time picture, orbit grammar, degree, exterior identity
// ---------------------------------------------------------------------------

struct UqrVerification {
    GridMask mask;                     // non-escaping pixels
    double hausdorff_pixels = std::numeric_limits<double>::infinity();
    std::size_t grammar_violations = 0;
    std::size_t orbits_checked = 0;
    int boundary_degree = 0;
    bool exterior_exact = false;
    std::size_t non_escaping = 0;
};

// ---------------------------------------------------------------------------
// Distortion sampling
// ---------------------------------------------------------------------------

struct UqrDistortion {
    DistortionReport core;       // squeeze-transport-power-flatten composition
    DistortionReport sectors;    // the slit-annulus sector interpolations
    DistortionReport disk_rings; // the D_i \ E_i extensions
    DistortionReport conformal;  // inverse branches and the exterior power map

    double k_max() const {
        return std::max({core.k_estimate, sectors.k_estimate, disk_rings.k_estimate});
    }
};

/// True when the 5-point finite-difference stencil around z keeps one
/// dispatch signature along `steps` applications of the map.
inline bool stencil_pure(const UqrMap& f, const cplx& z, int steps, double h) {
    auto signature = [&](cplx p) {
        std::vector<int> sig;
        for (int s = 0; s < steps; ++s) {
            f.dispatch_signature(p, sig);
            p = f.evaluate(p).value;
        }
        return sig;
    };
    const auto s0 = signature(z);
    for (const cplx off : {cplx(h, 0), cplx(-h, 0), cplx(0, h), cplx(0, -h)})
        if (signature(z + off) != s0) return false;
    return true;
}

inline UqrDistortion uqr_distortion(const UqrMap& f, std::size_t n_grid = 64) {
    const auto& plan = f.plan();
    UqrDistortion out;
    const double h = 1e-5;

    std::vector<cplx> core_s, conf_s;
    for (std::size_t i = 0; i < n_grid; ++i)
        for (std::size_t j = 0; j < n_grid; ++j) {
            const cplx z(-1.0 + 2.0 * (i + 0.5) / n_grid, -1.0 + 2.0 * (j + 0.5) / n_grid);
            if (std::abs(z) > 0.999) continue;
            bool in_d = false;
            for (const auto& d : plan.D)
                if (std::abs(z - d.center) <= d.radius + 1e-4) in_d = true;
            if (!in_d && stencil_pure(f, z, 1, h)) core_s.push_back(z);
        }
    out.core = beltrami_estimate([&](const cplx& z) { return f.core(z); }, core_s, h);

    std::vector<cplx> sect_s;
    const double L = std::log(2.0);
    for (std::size_t i = 0; i < plan.m; ++i)
        for (std::size_t a = 1; a < 16; ++a)
            for (std::size_t b = 1; b < 16; ++b) {
                const double x = L * a / 16.0;
                const double lo = f.seam_theta(i, x), hi = f.seam_theta(i + 1, x);
                const double y = lo + (hi - lo) * b / 16.0;
                const cplx z = std::exp(cplx(x, y));
                if (stencil_pure(f, z, 1, h * std::max(1.0, std::abs(z)))) sect_s.push_back(z);
            }
    out.sectors = beltrami_estimate([&](const cplx& z) { return f.evaluate(z).value; }, sect_s, h);

    for (std::size_t i = 0; i < plan.m; ++i) {
        std::vector<cplx> dr_s;
        const double r0 = plan.E[i].radius, r1 = plan.D[i].radius;
        for (std::size_t a = 1; a < 8; ++a)
            for (std::size_t k = 0; k < 32; ++k)
                dr_s.push_back(plan.E[i].center +
                               std::polar(r0 + (r1 - r0) * a / 8.0, kTwoPi * k / 32.0));
        out.disk_rings = merge_reports(
            out.disk_rings,
            beltrami_estimate([&](const cplx& z) { return f.d_ring(i).evaluate(z); }, dr_s));

        for (std::size_t k = 0; k < 32; ++k)
            conf_s.push_back(plan.E[i].center + std::polar(0.5 * r0, kTwoPi * k / 32.0));
        const std::size_t idx = i;
        out.conformal = merge_reports(
            out.conformal,
            beltrami_estimate(
                [&, idx](const cplx& z) { return plan.ifs.maps[idx].apply_inverse(z); }, conf_s));
        conf_s.clear();
    }
    for (std::size_t k = 0; k < 64; ++k)
        conf_s.push_back(std::polar(2.5 + 0.01 * k, kTwoPi * k / 64.0));
    out.conformal = merge_reports(
        out.conformal,
        beltrami_estimate([&](const cplx& z) { return pow_int(z, plan.m); }, conf_s));
    return out;
}

/// Iteration budget that resolves the escape-time dichotomy at pixel scale:
/// a pixel center at distance d from the attractor leaves the branch
/// structure after ~log(c/d)/log(1/s) conformal steps and crosses |z| = 2
/// within two or three more, so this choice marks the pixels within about
/// one pixel of the attractor and no others.
inline std::size_t recommended_escape_iterations(double s_max, double pixel_size) {
    const double steps = std::log(0.6 / pixel_size) / std::log(1.0 / s_max);
    return static_cast<std::size_t>(std::max(3.0, std::floor(steps) + 2.0));
}

/// Classifies a grid by escape under iteration (threshold |z| > 2, growth
/// confirmed over the next steps), compares the non-escaping set against an
/// attractor cloud, audits the orbit piece grammar on random starts, and
/// probes the boundary degree and the exterior power identity.
inline UqrVerification verify_uqr(const UqrMap& f, const PointCloud& cloud, Window window,
                                  std::size_t res, std::size_t max_iter,
                                  std::size_t n_orbits = 10000, std::uint64_t seed = 1) {
    UqrVerification ver;
    ver.mask = GridMask(res, window);
    for (std::size_t iy = 0; iy < res; ++iy) {
        for (std::size_t ix = 0; ix < res; ++ix) {
            cplx z = ver.mask.pixel_center(ix, iy);
            bool escaped = false;
            for (std::size_t t = 0; t < max_iter && !escaped; ++t) {
                z = f.evaluate(z).value;
                if (std::abs(z) > 2.0) {
                    const cplx z2 = f.evaluate(z).value;
                    const cplx z3 = f.evaluate(z2).value;
                    escaped = std::abs(z2) > std::abs(z) && std::abs(z3) > std::abs(z2);
                }
            }
            if (!escaped) ver.mask.at(ix, iy) = 255;
        }
    }
    ver.non_escaping = ver.mask.marked_count();
    if (ver.non_escaping > 0)
        ver.hausdorff_pixels =
            hausdorff_distance(ver.mask.marked_points(), cloud.points) / ver.mask.pixel_size();

    Rng rng(seed);
    for (std::size_t o = 0; o < n_orbits; ++o) {
        cplx z(rng.next_range(window.center.real() - window.half_width,
                              window.center.real() + window.half_width),
               rng.next_range(window.center.imag() - window.half_width,
                              window.center.imag() + window.half_width));
        int level = 0;
        std::size_t mid_count = 0, sector_count = 0;
        bool violated = false;
        for (std::size_t t = 0; t < max_iter + 6; ++t) {
            const UqrValue uv = f.evaluate(z);
            const int lv = uqr_piece_level(uv.piece);
            if (lv < level) violated = true;
            if (lv == 1 && ++mid_count > 1) violated = true;
            if (lv == 2 && ++sector_count > 1) violated = true;
            level = std::max(level, lv);
            z = uv.value;
            if (std::abs(z) > 1e12) break;
        }
        ver.grammar_violations += violated ? 1 : 0;
        ++ver.orbits_checked;
    }

    ver.boundary_degree =
        circle_winding([&](const cplx& z) { return f.evaluate(z).value; }, 3.0);

    ver.exterior_exact = true;
    Rng rng2(seed ^ 0xabcdef);
    for (int k = 0; k < 256; ++k) {
        const cplx z = std::polar(rng2.next_range(2.0, 3.5), rng2.next_range(0.0, kTwoPi));
        const UqrValue uv = f.evaluate(z);
        if (uv.piece != UqrPiece::Power || uv.value != pow_int(z, f.degree()))
            ver.exterior_exact = false;
    }
    return ver;
}

}  // namespace ifsjulia
