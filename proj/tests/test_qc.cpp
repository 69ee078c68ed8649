#include <catch2/catch_amalgamated.hpp>

#include "ifsjulia/qc.hpp"
#include "ifsjulia/quad.hpp"
#include "ifsjulia/rng.hpp"
#include "oracles.hpp"

using namespace ifsjulia;

namespace {

BoundaryCorrespondence identity_on(const Disk& circle, std::size_t n = 512) {
    return BoundaryCorrespondence::sample_map(circle, [](const cplx& z) { return z; }, n);
}

}  // namespace

TEST_CASE("boundary correspondences") {
    const auto bc = identity_on(Disk(cplx(0, 0), 2.0));
    CHECK(std::abs(bc.eval(0.3) - 2.0 * std::polar(1.0, 0.3)) < 1e-4);
    CHECK(bc.signed_area() > 0.0);
    CHECK_NOTHROW(bc.validate(true));

    SECTION("orientation reversal is rejected") {
        auto rev = BoundaryCorrespondence::sample_map(
            Disk(cplx(0, 0), 1.0), [](const cplx& z) { return std::conj(z); }, 128);
        CHECK_THROWS_WITH(rev.validate(), Catch::Matchers::ContainsSubstring("orientation"));
    }

    SECTION("self-intersecting target is rejected") {
        BoundaryCorrespondence bad;
        for (int k = 0; k < 64; ++k) {
            const double a = kTwoPi * k / 64.0;
            bad.angles.push_back(a);
            // a figure-eight-ish limacon with an inner loop
            bad.targets.push_back(std::polar(1.0 + 1.6 * std::cos(a), a));
        }
        CHECK_THROWS_WITH(bad.validate(true),
                          Catch::Matchers::ContainsSubstring("self-intersects"));
    }
}

TEST_CASE("ring interpolation") {
    SECTION("identity boundary data reproduces the identity") {
        const Disk outer(cplx(0, 0), 2.0), inner(cplx(0, 0), 1.0);
        const auto ring = interpolate_ring(outer, inner, identity_on(inner), identity_on(outer));
        Rng rng(3);
        for (int i = 0; i < 200; ++i) {
            const cplx z = std::polar(rng.next_range(1.0, 2.0), rng.next_range(0.0, kTwoPi));
            REQUIRE(std::abs(ring.evaluate(z) - z) < 1e-10);
        }
    }

    SECTION("rotation of the outer circle produces the closed-form shear") {
        const Disk outer(cplx(0, 0), 2.0), inner(cplx(0, 0), 1.0);
        const auto rot = BoundaryCorrespondence::sample_map(
            outer, [](const cplx& z) { return z * std::polar(1.0, kPi / 6.0); }, 512);
        const auto ring = interpolate_ring(outer, inner, identity_on(inner), rot);
        const auto rep = ring_distortion(ring, 10, 128);
        CHECK(rep.valid);
        const double want = oracles::shear_mu(kPi / 6.0, std::log(2.0));
        CHECK(std::abs(rep.sup_abs_mu - want) < 1e-3);
    }

    SECTION("generator-style data passes the homeomorphism grid check") {
        const auto q = build_quadratic(cplx(-0.5, 0), cplx(0.5, 0));
        const AffineContraction branch(cplx(0.003, 0.001), cplx(-0.498, 0.0005));
        const Disk img = branch.image_disk(unit_disk());
        const Disk rstar(q.z1, q.r_star);
        const auto inner_map = BoundaryCorrespondence::sample_map(
            img, [&](const cplx& z) { return branch.apply_inverse(z); }, 1024);
        const auto outer_map = BoundaryCorrespondence::sample_map(
            rstar, [&](const cplx& z) { return q.eval(z); }, 1024);
        const auto ring = interpolate_ring(rstar, img, inner_map, outer_map, 1024);
        const auto homeo = ring.homeomorphism_check();
        CHECK(homeo.ok);
        CHECK(homeo.min_jacobian > 0.0);
    }

    SECTION("boundary fidelity at the sample grid") {
        const Disk outer(cplx(0.05, 0), 1.5), inner(cplx(-0.1, 0.05), 0.4);
        const auto norm = normalize_circle_pair(outer, inner);
        const Mobius inv = norm.forward.inverse();
        const std::size_t n = 256;
        std::vector<cplx> inner_t(n), outer_t(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double th = kTwoPi * k / n;
            inner_t[k] = 0.7 * inv.apply(std::polar(norm.inner_radius, th));
            outer_t[k] = 2.0 * inv.apply(std::polar(norm.outer_radius, th));
        }
        const auto check_in = inner_t, check_out = outer_t;
        const AnnulusInterpolation ring(outer, inner, std::move(inner_t), std::move(outer_t));
        CHECK(ring.boundary_error(check_in, check_out) < 1e-8);
    }

    SECTION("crossing target curves are rejected") {
        const Disk outer(cplx(0, 0), 2.0), inner(cplx(0, 0), 1.0);
        const auto big_inner = BoundaryCorrespondence::sample_map(
            inner, [](const cplx& z) { return 3.0 * z; }, 256);
        CHECK_THROWS_WITH(interpolate_ring(outer, inner, big_inner, identity_on(outer)),
                          Catch::Matchers::ContainsSubstring("cross"));
    }

    SECTION("orientation-reversing boundary data is rejected") {
        const Disk outer(cplx(0, 0), 2.0), inner(cplx(0, 0), 1.0);
        const auto mirrored = BoundaryCorrespondence::sample_map(
            outer, [](const cplx& z) { return std::conj(z); }, 256);
        CHECK_THROWS_WITH(interpolate_ring(outer, inner, identity_on(inner), mirrored),
                          Catch::Matchers::ContainsSubstring("winding"));
    }
}

TEST_CASE("beltrami estimation") {
    SECTION("holomorphic map is conformal") {
        std::vector<cplx> samples;
        Rng rng(8);
        for (int i = 0; i < 500; ++i)
            samples.push_back(std::polar(rng.next_range(1.0, 2.0), rng.next_range(0.0, kTwoPi)));
        const auto rep = beltrami_estimate([](const cplx& z) { return z * z; }, samples);
        CHECK(rep.sup_abs_mu < 1e-6);
        CHECK(rep.n_degenerate == 0);
    }

    SECTION("horizontal stretch x+iy -> Kx+iy calibrates to K") {
        std::vector<cplx> samples;
        Rng rng(9);
        for (int i = 0; i < 200; ++i)
            samples.emplace_back(rng.next_range(-1, 1), rng.next_range(-1, 1));
        const auto rep = beltrami_estimate(
            [](const cplx& z) { return cplx(2.0 * z.real(), z.imag()); }, samples);
        CHECK(std::abs(rep.sup_abs_mu - 1.0 / 3.0) < 1e-9);
        CHECK(std::abs(rep.k_estimate - 2.0) < 1e-6);
    }

    SECTION("degenerate samples are excluded and counted") {
        const auto rep = beltrami_estimate([](const cplx&) { return cplx(0.5, 0.5); },
                                           {cplx(0, 0), cplx(1, 0)});
        CHECK(rep.n_degenerate == 2);
        CHECK(rep.n_samples == 0);
    }
}

TEST_CASE("sector extension") {
    SECTION("four affine boundary restrictions reproduce the affine map") {
        // circular-quadrilateral: two concentric arcs plus two radial cuts
        const double r0 = 1.0, r1 = 2.0, a0 = 0.3, a1 = 1.1;
        auto arc = [&](double r, double a) { return std::polar(r, a); };
        SectorSides src;
        src.bottom = [&](double u) { return arc(r0 + (r1 - r0) * u, a0); };
        src.top = [&](double u) { return arc(r0 + (r1 - r0) * u, a1); };
        src.left = [&](double v) { return arc(r0, a0 + (a1 - a0) * v); };
        src.right = [&](double v) { return arc(r1, a0 + (a1 - a0) * v); };
        const cplx alpha(0.8, 0.4), beta(-0.2, 0.7);
        auto affine = [&](const cplx& z) { return alpha * z + beta; };
        SectorSides tgt;
        tgt.bottom = [&, src](double u) { return affine(src.bottom(u)); };
        tgt.top = [&, src](double u) { return affine(src.top(u)); };
        tgt.left = [&, src](double v) { return affine(src.left(v)); };
        tgt.right = [&, src](double v) { return affine(src.right(v)); };
        const auto patch = extend_sector(src, tgt);
        for (int i = 1; i < 8; ++i)
            for (int j = 1; j < 8; ++j) {
                const cplx z = arc(r0 + (r1 - r0) * i / 8.0, a0 + (a1 - a0) * j / 8.0);
                REQUIRE(std::abs(patch.evaluate(z) - affine(z)) < 1e-8);
            }
        CHECK(patch.homeomorphism_check(64, 64).ok);
    }

    SECTION("corner mismatch is named") {
        SectorSides src;
        src.bottom = [](double u) { return cplx(u, 0); };
        src.top = [](double u) { return cplx(u, 1); };
        src.left = [](double v) { return cplx(0, v); };
        src.right = [](double v) { return cplx(1, v); };
        SectorSides tgt = src;
        tgt.top = [](double u) { return cplx(u + 0.5, 1); };  // breaks top-left corner
        CHECK_THROWS_WITH(extend_sector(src, tgt),
                          Catch::Matchers::ContainsSubstring("top-left"));
    }

    SECTION("degenerate boundary data is flagged by the grid check with a hint") {
        SectorSides src;
        src.bottom = [](double u) { return cplx(u, 0); };
        src.top = [](double u) { return cplx(u, 1); };
        src.left = [](double v) { return cplx(0, v); };
        src.right = [](double v) { return cplx(1, v); };
        SectorSides tgt;
        // fold: top and bottom target edges cross
        tgt.bottom = [](double u) { return cplx(u, 0); };
        tgt.top = [](double u) { return cplx(u, u < 0.5 ? 1.0 : -1.0 + 2e-9); };
        tgt.left = [](double v) { return cplx(0, v); };
        tgt.right = [](double v) { return cplx(1, v * (-1.0 + 2e-9)); };
        const auto patch = extend_sector(src, tgt, 1e-6);
        const auto homeo = patch.homeomorphism_check(32, 32);
        CHECK_FALSE(homeo.ok);
        CHECK_THAT(homeo.hint, Catch::Matchers::ContainsSubstring("density"));
    }
}
