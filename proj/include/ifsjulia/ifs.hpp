#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ifsjulia/geometry.hpp"
#include "ifsjulia/rng.hpp"

namespace ifsjulia {

// ---------------------------------------------------------------------------
// Conformal IFS on the closed unit disk
// ---------------------------------------------------------------------------

struct ConformalIFS {
    std::vector<AffineContraction> maps;
    std::string label;

    std::size_t size() const { return maps.size(); }

    /// Largest contraction factor s = max |a_i|.
    double max_factor() const {
        double s = 0.0;
        for (const auto& m : maps) s = std::max(s, m.factor());
        return s;
    }
};

struct IfsValidationEntry {
    std::size_t index = 0;
    double abs_a = 0.0;
    double abs_b = 0.0;
    double sum = 0.0;  // |a| + |b|; map sends the closed unit disk into the open one iff < 1
    cplx fixed_point;
    bool ok = false;
};

struct IfsValidationReport {
    bool pass = false;
    std::vector<IfsValidationEntry> entries;
    std::vector<std::size_t> offending;

    std::string summary() const {
        if (pass) return "ok";
        std::string s = "maps escaping the unit disk:";
        for (auto i : offending) s += " #" + std::to_string(i);
        return s;
    }
};

/// Checks that every map sends the closed unit disk relatively compactly into
/// the open unit disk, i.e. |a| + |b| < 1.
inline IfsValidationReport validate_ifs(const ConformalIFS& ifs) {
    IfsValidationReport rep;
    rep.pass = !ifs.maps.empty();
    for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
        const auto& m = ifs.maps[i];
        IfsValidationEntry e;
        e.index = i;
        e.abs_a = std::abs(m.a);
        e.abs_b = std::abs(m.b);
        e.sum = e.abs_a + e.abs_b;
        e.fixed_point = m.fixed_point();
        e.ok = e.sum < 1.0;
        if (!e.ok) {
            rep.pass = false;
            rep.offending.push_back(i);
        }
        rep.entries.push_back(e);
    }
    return rep;
}

inline void require_valid(const ConformalIFS& ifs) {
    auto rep = validate_ifs(ifs);
    if (!rep.pass)
        throw std::invalid_argument("invalid IFS '" + ifs.label + "': " + rep.summary());
}

// ---------------------------------------------------------------------------
// Point clouds and the chaos game
// ---------------------------------------------------------------------------

struct CloudMeta {
    std::uint64_t seed = 0;
    std::size_t n_points = 0;
    std::size_t burn_in = 0;
};

struct PointCloud {
    std::vector<cplx> points;
    CloudMeta meta;
};

/// Random-orbit approximation of the attractor: iterate z <- phi_rand(z)
/// from z0 = 0, discard burn_in samples, record n_points. Deterministic for a
/// fixed seed.
inline PointCloud attractor_chaos_game(const ConformalIFS& ifs, std::size_t n_points,
                                       std::size_t burn_in, std::uint64_t seed) {
    require_valid(ifs);
    if (n_points < 1) throw std::invalid_argument("attractor_chaos_game: n_points must be >= 1");
    PointCloud cloud;
    cloud.meta = CloudMeta{seed, n_points, burn_in};
    cloud.points.reserve(n_points);
    Rng rng(seed);
    const std::size_t k = ifs.maps.size();
    cplx z(0.0, 0.0);
    for (std::size_t t = 0; t < burn_in + n_points; ++t) {
        z = ifs.maps[rng.next_index(k)].apply(z);
        if (t >= burn_in) cloud.points.push_back(z);
    }
    return cloud;
}

// ---------------------------------------------------------------------------
// Deterministic disk covers: S = intersection of X^k(closed unit disk)
// ---------------------------------------------------------------------------

struct DiskCover {
    std::size_t depth = 0;
    std::vector<Disk> disks;
};

constexpr std::size_t kDefaultWordCap = 4096;

inline std::size_t checked_word_count(std::size_t k, std::size_t depth, std::size_t cap) {
    std::size_t n = 1;
    for (std::size_t i = 0; i < depth; ++i) {
        if (n > cap / k)
            throw std::invalid_argument("word cap " + std::to_string(cap) +
                                        " exceeded; lower the depth/N");
        n *= k;
    }
    return n;
}

/// All compositions of length `depth` applied to the unit disk, in
/// lexicographic word order (first letter outermost).
inline DiskCover attractor_disk_cover(const ConformalIFS& ifs, std::size_t depth,
                                      std::size_t cap = kDefaultWordCap) {
    require_valid(ifs);
    checked_word_count(ifs.maps.size(), depth, cap);
    DiskCover cover;
    cover.depth = depth;
    std::vector<Disk> current{unit_disk()};
    for (std::size_t level = 0; level < depth; ++level) {
        std::vector<Disk> next;
        next.reserve(current.size() * ifs.maps.size());
        for (const auto& d : current)
            for (const auto& m : ifs.maps) next.push_back(m.image_disk(d));
        current = std::move(next);
    }
    cover.disks = std::move(current);
    return cover;
}

/// The iterated system X^N: all words of length N in lexicographic order,
/// composed first-letter-outermost. Duplicate words are kept unless
/// `deduplicate` is set.
inline ConformalIFS iterate_system(const ConformalIFS& ifs, std::size_t N,
                                   std::size_t cap = kDefaultWordCap, bool deduplicate = false) {
    require_valid(ifs);
    if (N < 1) throw std::invalid_argument("iterate_system: N must be >= 1");
    checked_word_count(ifs.maps.size(), N, cap);
    std::vector<AffineContraction> words = {};
    for (const auto& m : ifs.maps) words.push_back(m);
    for (std::size_t level = 1; level < N; ++level) {
        std::vector<AffineContraction> next;
        next.reserve(words.size() * ifs.maps.size());
        for (const auto& w : words)
            for (const auto& m : ifs.maps) next.push_back(compose(w, m));
        words = std::move(next);
    }
    ConformalIFS out;
    out.label = ifs.label + "^" + std::to_string(N);
    if (deduplicate) {
        // commuting letters produce equal words up to rounding
        for (const auto& w : words) {
            bool dup = false;
            for (const auto& u : out.maps)
                if (std::abs(u.a - w.a) <= 1e-12 && std::abs(u.b - w.b) <= 1e-12) {
                    dup = true;
                    break;
                }
            if (!dup) out.maps.push_back(w);
        }
    } else {
        out.maps = std::move(words);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Hausdorff distance between point clouds
// ---------------------------------------------------------------------------

namespace detail {

/// Hash grid over a point set for exact nearest-neighbour queries via
/// expanding ring search.
class PointGrid {
public:
    explicit PointGrid(const std::vector<cplx>& pts) : pts_(pts) {
        double lo_x = pts[0].real(), hi_x = lo_x, lo_y = pts[0].imag(), hi_y = lo_y;
        for (const auto& p : pts) {
            lo_x = std::min(lo_x, p.real());
            hi_x = std::max(hi_x, p.real());
            lo_y = std::min(lo_y, p.imag());
            hi_y = std::max(hi_y, p.imag());
        }
        origin_ = cplx(lo_x, lo_y);
        double diam = std::max({hi_x - lo_x, hi_y - lo_y, 1e-4});
        // ~1 point per cell on average for uniformly spread data
        double target_cells = std::sqrt(static_cast<double>(pts.size()));
        cell_ = std::max(diam / std::max(1.0, target_cells), 1e-12);
        imin_ = cell_index(lo_x - origin_.real());
        imax_ = cell_index(hi_x - origin_.real());
        jmin_ = cell_index(lo_y - origin_.imag());
        jmax_ = cell_index(hi_y - origin_.imag());
        for (std::size_t i = 0; i < pts_.size(); ++i) buckets_[key_of(pts_[i])].push_back(i);
    }

    double nearest_distance(const cplx& q) const {
        const long qi = cell_index(q.real() - origin_.real());
        const long qj = cell_index(q.imag() - origin_.imag());
        // Rings past this bound cannot contain any occupied cell.
        const long last_ring =
            std::max({qi - imin_, imax_ - qi, qj - jmin_, jmax_ - qj, 0L});
        double best = std::numeric_limits<double>::infinity();
        for (long ring = 0; ring <= last_ring; ++ring) {
            // A point in a cell at Chebyshev ring distance `ring` lies at
            // Euclidean distance >= (ring-1)*cell, so the best is exact once
            // that lower bound exceeds it.
            if (best <= (static_cast<double>(ring) - 1.0) * cell_) break;
            scan_ring(qi, qj, ring, q, best);
        }
        return best;
    }

private:
    long cell_index(double v) const { return static_cast<long>(std::floor(v / cell_)); }

    std::int64_t key_of(const cplx& p) const {
        long i = cell_index(p.real() - origin_.real());
        long j = cell_index(p.imag() - origin_.imag());
        return (static_cast<std::int64_t>(i) << 32) ^ (static_cast<std::int64_t>(j) & 0xffffffff);
    }

    void scan_ring(long qi, long qj, long ring, const cplx& q, double& best) const {
        auto visit = [&](long i, long j) {
            std::int64_t key = (static_cast<std::int64_t>(i) << 32) ^
                               (static_cast<std::int64_t>(j) & 0xffffffff);
            auto it = buckets_.find(key);
            if (it == buckets_.end()) return;
            for (auto idx : it->second) best = std::min(best, std::abs(pts_[idx] - q));
        };
        if (ring == 0) {
            visit(qi, qj);
            return;
        }
        for (long i = qi - ring; i <= qi + ring; ++i) {
            visit(i, qj - ring);
            visit(i, qj + ring);
        }
        for (long j = qj - ring + 1; j <= qj + ring - 1; ++j) {
            visit(qi - ring, j);
            visit(qi + ring, j);
        }
    }

    const std::vector<cplx>& pts_;
    cplx origin_;
    double cell_ = 1.0;
    long imin_ = 0, imax_ = 0, jmin_ = 0, jmax_ = 0;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets_;
};

inline double directed_hausdorff(const std::vector<cplx>& from, const PointGrid& to) {
    double worst = 0.0;
    for (const auto& p : from) worst = std::max(worst, to.nearest_distance(p));
    return worst;
}

}  // namespace detail

/// Symmetric Hausdorff distance between two non-empty point clouds. Exact
/// nearest neighbours via a bucketed expanding-ring search.
inline double hausdorff_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("hausdorff_distance: empty input cloud");
    detail::PointGrid ga(a), gb(b);
    return std::max(detail::directed_hausdorff(a, gb), detail::directed_hausdorff(b, ga));
}

inline double hausdorff_distance(const PointCloud& a, const PointCloud& b) {
    return hausdorff_distance(a.points, b.points);
}

// ---------------------------------------------------------------------------
// Separated-pair selection over words of length N
// ---------------------------------------------------------------------------

/// Data backing the passage from X to X^N: the iterated system, the
/// distinguished separated pair (f1, f2), and the separation constants.
struct SeparationPlan {
    std::size_t N = 0;
    ConformalIFS iterated;   // psi_1..psi_m, m = k^N
    std::size_t f1_index = 0;
    std::size_t f2_index = 0;
    double delta = 0.0;
    double r = 0.0;        // max pairwise fixed-point distance in the base system
    double d_lower = 0.0;  // (1/2 - 2 delta) * r
    double T = 0.0;        // max |fixed point| over the iterated maps
    double verified_min_distance = 0.0;  // exhaustively computed over all words

    const AffineContraction& f1() const { return iterated.maps[f1_index]; }
    const AffineContraction& f2() const { return iterated.maps[f2_index]; }
};

/// Index in the lexicographic word list of the constant word (i, i, ..., i).
inline std::size_t constant_word_index(std::size_t i, std::size_t k, std::size_t N) {
    std::size_t idx = 0;
    for (std::size_t t = 0; t < N; ++t) idx = idx * k + i;
    return idx;
}

/// Chooses the pair of generators with maximal fixed-point distance, iterates
/// the system to word length N with s_max^N < delta*r, and verifies by direct
/// disk-distance computation that every word's image disk keeps distance at
/// least (1/2 - 2 delta)*r from one of f1(closed disk), f2(closed disk).
inline SeparationPlan build_separation_plan(const ConformalIFS& ifs, double delta,
                                            std::size_t cap = kDefaultWordCap) {
    require_valid(ifs);
    if (!(delta > 0.0 && delta < 0.01))
        throw std::invalid_argument("build_separation_plan: need 0 < delta < 1/100");

    const std::size_t k = ifs.maps.size();
    std::vector<cplx> fixed;
    for (const auto& m : ifs.maps) fixed.push_back(m.fixed_point());

    double r = 0.0;
    std::size_t p = 0, q = 0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            double d = std::abs(fixed[i] - fixed[j]);
            if (d > r) { r = d; p = i; q = j; }
        }
    if (!(r > 0.0))
        throw std::invalid_argument(
            "build_separation_plan: all fixed points coincide (hypothesis requires two distinct)");

    const double s = ifs.max_factor();
    std::size_t N = 1;
    double sN = s;
    while (!(sN < delta * r)) {
        ++N;
        sN *= s;
        if (N > 64) throw std::logic_error("build_separation_plan: runaway N");
    }
    try {
        checked_word_count(k, N, cap);
    } catch (const std::invalid_argument&) {
        // largest word length the cap admits, and the delta it would need
        std::size_t n_fit = 0;
        for (std::size_t n = 1, count = k; count <= cap; ++n, count *= k) {
            n_fit = n;
            if (count > cap / k) break;
        }
        const double delta_min = std::pow(s, static_cast<double>(n_fit)) / r;
        throw std::invalid_argument(
            "build_separation_plan: delta " + std::to_string(delta) + " needs word length " +
            std::to_string(N) + " and " + std::to_string(k) + "^" + std::to_string(N) +
            " words exceeds the cap " + std::to_string(cap) + "; smallest admissible delta is " +
            std::to_string(delta_min) +
            (delta_min >= 0.01 ? " (above 1/100: raise the cap)" : ""));
    }

    SeparationPlan plan;
    plan.N = N;
    plan.delta = delta;
    plan.r = r;
    plan.d_lower = (0.5 - 2.0 * delta) * r;
    plan.iterated = iterate_system(ifs, N, cap);
    plan.f1_index = constant_word_index(p, k, N);
    plan.f2_index = constant_word_index(q, k, N);

    const Disk ball = unit_disk();
    const Disk f1_img = plan.f1().image_disk(ball);
    const Disk f2_img = plan.f2().image_disk(ball);
    double T = 0.0;
    double verified = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < plan.iterated.maps.size(); ++j) {
        const auto& w = plan.iterated.maps[j];
        T = std::max(T, std::abs(w.fixed_point()));
        if (j == plan.f1_index || j == plan.f2_index) continue;
        const Disk img = w.image_disk(ball);
        const double best = std::max(disk_distance(f1_img, img), disk_distance(f2_img, img));
        verified = std::min(verified, best);
        if (best < plan.d_lower)
            throw std::logic_error("build_separation_plan: word " + std::to_string(j) +
                                   " violates the separation bound (" + std::to_string(best) +
                                   " < " + std::to_string(plan.d_lower) + ")");
    }
    // f1 vs f2 themselves separate at nearly the full distance r.
    verified = std::min(verified, disk_distance(f1_img, f2_img));
    plan.T = T;
    plan.verified_min_distance = verified;
    if (!(T < 1.0)) throw std::logic_error("build_separation_plan: fixed points not inside the disk");
    return plan;
}

/// Worst signed excess of cloud points over the cover union: max over points
/// of dist(point, nearest disk) measured as |p - center| - radius. At most 0
/// (up to tolerance) when the cloud is contained in the cover.
inline double cover_excess(const PointCloud& cloud, const DiskCover& cover) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& p : cloud.points) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& d : cover.disks) best = std::min(best, std::abs(p - d.center) - d.radius);
        worst = std::max(worst, best);
    }
    return worst;
}

/// The branch f_i, i in {1,2}, serving word j: the one whose image disk is
/// farther from psi_j's image disk.
inline std::size_t separated_partner(const SeparationPlan& plan, std::size_t j) {
    if (j == plan.f1_index) return plan.f2_index;
    if (j == plan.f2_index) return plan.f1_index;
    const Disk ball = unit_disk();
    const Disk img = plan.iterated.maps[j].image_disk(ball);
    const double d1 = disk_distance(plan.f1().image_disk(ball), img);
    const double d2 = disk_distance(plan.f2().image_disk(ball), img);
    return d1 >= d2 ? plan.f1_index : plan.f2_index;
}

}  // namespace ifsjulia
