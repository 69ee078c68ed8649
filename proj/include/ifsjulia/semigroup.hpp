#pragma once

#include <optional>
#include <vector>

#include "ifsjulia/geometry.hpp"
#include "ifsjulia/grid.hpp"
#include "ifsjulia/ifs.hpp"
#include "ifsjulia/qc.hpp"
#include "ifsjulia/quad.hpp"
#include "ifsjulia/rng.hpp"

namespace ifsjulia {

// ---------------------------------------------------------------------------
// Degree-two semigroup generators: two inverse branches glued into a
// quadratic through ring interpolations
// ---------------------------------------------------------------------------

enum class GenPiece { InverseBranch, Ring, Quadratic };

inline bool is_analytic(GenPiece p) { return p != GenPiece::Ring; }

struct GenValue {
    cplx value;
    GenPiece piece;
};

/// One generator g_j: the inverse of the separated branch f_i on its image
/// disk, the inverse of psi_j on its image disk, the glue quadratic p_j
/// outside the two R*-disks, and ring interpolations in between. Total on C.
class Generator {
public:
    std::size_t j_index = 0;     // which word this generator inverts
    std::size_t i_index = 0;     // the separated partner (f1 or f2)
    AffineContraction branch_i;  // forward maps; evaluation uses their inverses
    AffineContraction branch_j;
    Disk domain_i;               // branch_i(closed unit disk)
    Disk domain_j;
    QuadraticGlue quad;
    Disk ring_disk_i;            // B(w_i, R*)
    Disk ring_disk_j;            // B(w_j, R*)

    Generator(std::size_t j, std::size_t i, AffineContraction fi, AffineContraction psij,
              QuadraticGlue q, AnnulusInterpolation ring_i, AnnulusInterpolation ring_j)
        : j_index(j),
          i_index(i),
          branch_i(fi),
          branch_j(psij),
          domain_i(fi.image_disk(unit_disk())),
          domain_j(psij.image_disk(unit_disk())),
          quad(q),
          ring_disk_i(q.z1, q.r_star),
          ring_disk_j(q.z2, q.r_star),
          ring_i_(std::move(ring_i)),
          ring_j_(std::move(ring_j)) {}

    /// Region-membership dispatch; priority: inverse branches, rings,
    /// quadratic. Total on C.
    GenValue evaluate(const cplx& z) const {
        if (domain_i.contains(z)) return {branch_i.apply_inverse(z), GenPiece::InverseBranch};
        if (domain_j.contains(z)) return {branch_j.apply_inverse(z), GenPiece::InverseBranch};
        if (ring_disk_i.contains(z)) return {ring_i_.evaluate(z), GenPiece::Ring};
        if (ring_disk_j.contains(z)) return {ring_j_.evaluate(z), GenPiece::Ring};
        return {quad.eval(z), GenPiece::Quadratic};
    }

    bool in_inverse_branch(const cplx& z) const {
        return domain_i.contains(z) || domain_j.contains(z);
    }

    const AnnulusInterpolation& ring_i() const { return ring_i_; }
    const AnnulusInterpolation& ring_j() const { return ring_j_; }

private:
    AnnulusInterpolation ring_i_, ring_j_;
};

namespace detail {

inline AnnulusInterpolation build_branch_ring(const Disk& outer, const Disk& inner,
                                              const AffineContraction& branch,
                                              const QuadraticGlue& quad, std::size_t n) {
    const auto norm = normalize_circle_pair(outer, inner);
    const Mobius inv = norm.forward.inverse();
    std::vector<cplx> inner_t(n), outer_t(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double theta = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        inner_t[k] = branch.apply_inverse(inv.apply(std::polar(norm.inner_radius, theta)));
        outer_t[k] = quad.eval(inv.apply(std::polar(norm.outer_radius, theta)));
    }
    return AnnulusInterpolation(outer, inner, std::move(inner_t), std::move(outer_t));
}

}  // namespace detail

/// Assembles the generator for word j of the plan. The boundary data of each
/// ring is sampled exactly from the adjacent analytic pieces, so the glued
/// map is continuous across the seams by construction.
inline Generator build_generator(const SeparationPlan& plan, std::size_t j,
                                 std::size_t boundary_samples = 4096) {
    if (j >= plan.iterated.maps.size())
        throw std::invalid_argument("build_generator: word index out of range");
    const std::size_t i = separated_partner(plan, j);
    const AffineContraction fi = plan.iterated.maps[i];
    const AffineContraction psij = plan.iterated.maps[j];
    const cplx wi = fi.fixed_point();
    const cplx wj = psij.fixed_point();

    QuadraticGlue quad = build_quadratic(wi, wj);
    const auto containment = validate_containment(quad, plan);
    if (!containment.pass())
        throw std::invalid_argument("build_generator: containment failed for word " +
                                    std::to_string(j) + ": " + containment.failure());

    const Disk ball = unit_disk();
    const Disk img_i = fi.image_disk(ball);
    const Disk img_j = psij.image_disk(ball);
    const Disk ring_i(wi, quad.r_star);
    const Disk ring_j(wj, quad.r_star);

    // Branch disks must sit strictly inside their R*-disks, and the two
    // R*-disks must be disjoint, otherwise the piece domains overlap.
    if (std::abs(img_i.center - wi) + img_i.radius >= quad.r_star ||
        std::abs(img_j.center - wj) + img_j.radius >= quad.r_star)
        throw std::logic_error("build_generator: branch disk exits its R*-disk");
    if (disk_gap(ring_i, ring_j) <= 0.0)
        throw std::logic_error("build_generator: R*-disks intersect");

    // Escape-radius derivation: outside |z| = 10 the quadratic strictly
    // grows the modulus (|a|(R-1)^2 - 10 > R and increasing beyond).
    const double abs_a = std::abs(quad.a);
    const double R = 10.0;
    if (!(abs_a * (R - 1.0) * (R - 1.0) - 10.0 > R))
        throw std::logic_error("build_generator: escape radius 10 not valid for this system");

    return Generator(j, i, fi, psij, quad,
                     detail::build_branch_ring(ring_i, img_i, fi, quad, boundary_samples),
                     detail::build_branch_ring(ring_j, img_j, psij, quad, boundary_samples));
}

inline std::vector<Generator> build_all_generators(const SeparationPlan& plan,
                                                   std::size_t boundary_samples = 4096) {
    std::vector<Generator> gens;
    gens.reserve(plan.iterated.maps.size());
    for (std::size_t j = 0; j < plan.iterated.maps.size(); ++j)
        gens.push_back(build_generator(plan, j, boundary_samples));
    return gens;
}

// ---------------------------------------------------------------------------
// Seam audit
// ---------------------------------------------------------------------------

struct SeamReport {
    double worst = 0.0;
    std::string worst_seam;
};

/// Max discrepancy between adjacent pieces across each seam circle,
/// sampled at n angles per seam.
inline SeamReport audit_generator_seams(const Generator& g, std::size_t n = 512) {
    SeamReport rep;
    auto check = [&](const Disk& seam, const PlanarMap& inside_map, const PlanarMap& outside_map,
                     const char* name) {
        for (std::size_t k = 0; k < n; ++k) {
            const double a = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
            const cplx z = seam.boundary_point(a);
            const double d = std::abs(inside_map(z) - outside_map(z));
            if (d > rep.worst) {
                rep.worst = d;
                rep.worst_seam = name;
            }
        }
    };
    check(g.domain_i, [&](const cplx& z) { return g.branch_i.apply_inverse(z); },
          [&](const cplx& z) { return g.ring_i().evaluate(z); }, "branch_i|ring_i");
    check(g.domain_j, [&](const cplx& z) { return g.branch_j.apply_inverse(z); },
          [&](const cplx& z) { return g.ring_j().evaluate(z); }, "branch_j|ring_j");
    check(g.ring_disk_i, [&](const cplx& z) { return g.ring_i().evaluate(z); },
          [&](const cplx& z) { return g.quad.eval(z); }, "ring_i|quad");
    check(g.ring_disk_j, [&](const cplx& z) { return g.ring_j().evaluate(z); },
          [&](const cplx& z) { return g.quad.eval(z); }, "ring_j|quad");
    return rep;
}

// ---------------------------------------------------------------------------
// Orbits
// ---------------------------------------------------------------------------

struct WordPolicy {
    enum class Kind { Fixed, RandomAdmissible, RandomUniform };
    Kind kind = Kind::RandomAdmissible;
    std::vector<std::size_t> fixed_word;  // cycled when Fixed
    std::uint64_t seed = 0;
};

struct OrbitTrace {
    std::vector<cplx> points;       // z0, z1, ...
    std::vector<GenPiece> pieces;   // piece applied at each step
    std::vector<std::size_t> word;  // generator indices actually applied
    bool escaped = false;
    std::optional<std::size_t> escape_index;

    std::size_t interpolated_steps_before_escape() const {
        std::size_t n = 0;
        const std::size_t stop = escape_index.value_or(pieces.size());
        for (std::size_t t = 0; t < stop && t < pieces.size(); ++t)
            if (pieces[t] == GenPiece::Ring) ++n;
        return n;
    }
};

/// Iterates the semigroup along a word. Escape is declared at the first
/// radius crossing once the modulus keeps growing for 3 further steps.
/// RandomAdmissible picks uniformly among generators whose inverse-branch
/// domains contain the current point (those keep attractor orbits inside the
/// attractor), falling back to a uniform pick when none does.
inline OrbitTrace run_orbit(const std::vector<Generator>& gens, const WordPolicy& policy,
                            const cplx& z0, std::size_t max_steps, double escape_radius = 10.0) {
    if (gens.empty()) throw std::invalid_argument("run_orbit: no generators");
    if (escape_radius < 10.0)
        throw std::invalid_argument("run_orbit: escape radius below the derived bound 10");
    OrbitTrace trace;
    trace.points.push_back(z0);
    Rng rng(policy.seed);
    cplx z = z0;
    std::optional<std::size_t> crossing;
    std::size_t growth = 0;
    std::vector<std::size_t> admissible;
    for (std::size_t t = 0; t < max_steps; ++t) {
        std::size_t j = 0;
        switch (policy.kind) {
            case WordPolicy::Kind::Fixed:
                j = policy.fixed_word[t % policy.fixed_word.size()];
                break;
            case WordPolicy::Kind::RandomUniform:
                j = rng.next_index(gens.size());
                break;
            case WordPolicy::Kind::RandomAdmissible: {
                admissible.clear();
                for (std::size_t k = 0; k < gens.size(); ++k)
                    if (gens[k].in_inverse_branch(z)) admissible.push_back(k);
                j = admissible.empty() ? rng.next_index(gens.size())
                                       : admissible[rng.next_index(admissible.size())];
                break;
            }
        }
        const double prev_mod = std::abs(z);
        const GenValue gv = gens[j].evaluate(z);
        z = gv.value;
        trace.points.push_back(z);
        trace.pieces.push_back(gv.piece);
        trace.word.push_back(j);
        if (!crossing && std::abs(z) > escape_radius) {
            crossing = t;
            growth = 0;
        } else if (crossing) {
            if (std::abs(z) > prev_mod) {
                if (++growth >= 3) {
                    trace.escaped = true;
                    trace.escape_index = crossing;
                    return trace;
                }
            } else {
                crossing.reset();
            }
        }
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Degree probe
// ---------------------------------------------------------------------------

/// Winding number of t -> f(R e^{it}) about 0, sampled densely.
inline int circle_winding(const PlanarMap& f, double radius = 5.0, std::size_t n = 4096) {
    double total = 0.0;
    cplx prev = f(std::polar(radius, 0.0));
    for (std::size_t k = 1; k <= n; ++k) {
        const cplx cur = f(std::polar(radius, kTwoPi * static_cast<double>(k) / n));
        total += std::arg(cur / prev);
        prev = cur;
    }
    return static_cast<int>(std::lround(total / kTwoPi));
}

/// Large-circle mapping degree of a generator; the construction promises 2.
inline int degree_check(const Generator& g, double radius = 5.0) {
    const int w = circle_winding([&](const cplx& z) { return g.evaluate(z).value; }, radius);
    if (w != 2)
        throw std::logic_error("degree_check: generator " + std::to_string(g.j_index) +
                               " has winding " + std::to_string(w));
    return w;
}

// ---------------------------------------------------------------------------
// Julia set estimation on a pixel grid
// ---------------------------------------------------------------------------

/// Marks a pixel when some point of it admits a sampled word that keeps its
/// orbit inside the closed unit disk for `word_length` steps; this is the
/// grid version of "the whole neighbourhood escapes under every word".
/// Branch admission at the first step tolerates the pixel circumradius (the
/// orbit then starts from the nearest in-branch point, a point of the
/// pixel); later steps use exact membership. Words are sampled uniformly
/// over the admissible inverse branches at each step; a pixel with no
/// admissible branch escapes under every word. RNG streams split per row.
inline GridMask julia_estimate_grid(const std::vector<Generator>& gens, Window window,
                                    std::size_t res, std::size_t words_per_pixel,
                                    std::size_t word_length, std::uint64_t seed) {
    if (!window.contains_closed_unit_disk())
        throw std::invalid_argument("julia_estimate_grid: window must contain the unit disk");
    GridMask mask(res, window);
    const double pad = 0.5 * std::sqrt(2.0) * mask.pixel_size();
    struct BranchRef {
        std::size_t gen;
        Disk disk;
    };
    std::vector<BranchRef> adm0;
    std::vector<std::size_t> admissible;
    for (std::size_t iy = 0; iy < res; ++iy) {
        Rng rng(seed, iy);
        for (std::size_t ix = 0; ix < res; ++ix) {
            const cplx z0 = mask.pixel_center(ix, iy);
            if (std::abs(z0) > 1.0 + pad) continue;  // attractor lives in the unit disk
            // the first step's admissible branches do not depend on the word
            adm0.clear();
            for (std::size_t k = 0; k < gens.size(); ++k) {
                if (std::abs(z0 - gens[k].domain_i.center) <= gens[k].domain_i.radius + pad)
                    adm0.push_back({k, gens[k].domain_i});
                if (std::abs(z0 - gens[k].domain_j.center) <= gens[k].domain_j.radius + pad)
                    adm0.push_back({k, gens[k].domain_j});
            }
            if (adm0.empty()) continue;
            bool marked = false;
            for (std::size_t w = 0; w < words_per_pixel && !marked; ++w) {
                const BranchRef& ref = adm0[rng.next_index(adm0.size())];
                const double d = std::abs(z0 - ref.disk.center);
                const cplx start = d <= ref.disk.radius
                                       ? z0
                                       : ref.disk.center + (z0 - ref.disk.center) * (ref.disk.radius / d);
                cplx z = gens[ref.gen].evaluate(start).value;
                bool stayed = std::abs(z) <= 1.0;
                for (std::size_t t = 1; t < word_length && stayed; ++t) {
                    admissible.clear();
                    for (std::size_t k = 0; k < gens.size(); ++k)
                        if (gens[k].in_inverse_branch(z)) admissible.push_back(k);
                    if (admissible.empty()) {
                        stayed = false;
                        break;
                    }
                    const std::size_t j = admissible[rng.next_index(admissible.size())];
                    z = gens[j].evaluate(z).value;
                    if (std::abs(z) > 1.0) stayed = false;
                }
                marked = stayed;
            }
            if (marked) mask.at(ix, iy) = 255;
        }
    }
    return mask;
}

}  // namespace ifsjulia
