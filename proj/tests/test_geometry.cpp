#include <catch2/catch_amalgamated.hpp>

#include "ifsjulia/geometry.hpp"
#include "ifsjulia/rng.hpp"
#include "oracles.hpp"

using namespace ifsjulia;

TEST_CASE("affine application and fixed points") {
    CHECK(AffineContraction(cplx(0.5, 0), cplx(0, 0)).apply(cplx(1, 0)) == cplx(0.5, 0));
    CHECK(AffineContraction(cplx(0, 0.5), cplx(0.2, 0)).apply(cplx(0, 0)) == cplx(0.2, 0));

    // direct complex multiply against a widened-precision evaluation
    {
        const cplx a(0.3, 0.1), b(-0.2, 0.0), z(1.0, 1.0);
        const cplx got = AffineContraction(a, b).apply(z);
        const std::complex<long double> al(0.3L, 0.1L), zl(1.0L, 1.0L), bl(-0.2L, 0.0L);
        const auto want = al * zl + bl;
        CHECK(std::abs(got.real() - static_cast<double>(want.real())) < 1e-15);
        CHECK(std::abs(got.imag() - static_cast<double>(want.imag())) < 1e-15);
    }

    CHECK(std::abs(AffineContraction(cplx(0.5, 0), cplx(0, 0)).fixed_point()) == 0.0);
    CHECK(AffineContraction(cplx(0.5, 0), cplx(0.25, 0)).fixed_point() == cplx(0.5, 0));

    // iterate 200 times from 0 and compare with b/(1-a)
    {
        const AffineContraction m(cplx(0, 0.4), cplx(0.1, 0));
        cplx z(0, 0);
        for (int i = 0; i < 200; ++i) z = m.apply(z);
        CHECK(std::abs(z - m.fixed_point()) < 1e-14);
        CHECK(std::abs(m.fixed_point() - cplx(0.1, 0) / (cplx(1, 0) - cplx(0, 0.4))) < 1e-15);
    }

    CHECK_THROWS_AS(AffineContraction(cplx(1.2, 0), cplx(0, 0)), std::invalid_argument);
    CHECK_THROWS_AS(AffineContraction(cplx(1.0, 0), cplx(0, 0)), std::invalid_argument);
}

TEST_CASE("fixed point is fixed for random contractions") {
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        const double s = rng.next_range(0.05, 0.95);
        const cplx a = std::polar(s, rng.next_range(0.0, kTwoPi));
        const cplx b = std::polar(rng.next_range(0.0, 1.0 - s - 1e-3), rng.next_range(0.0, kTwoPi));
        const AffineContraction m(a, b);
        const cplx w = m.fixed_point();
        REQUIRE(std::abs(m.apply(w) - w) < 1e-12);
    }
}

TEST_CASE("image disks") {
    const Disk unit = unit_disk();
    {
        const auto d = AffineContraction(cplx(0.5, 0), cplx(0, 0)).image_disk(unit);
        CHECK(d.center == cplx(0, 0));
        CHECK(d.radius == 0.5);
    }
    {
        const auto d = AffineContraction(cplx(0.5, 0), cplx(0.3, 0)).image_disk(unit);
        CHECK(d.center == cplx(0.3, 0));
        CHECK(d.radius == 0.5);
    }
    // 64 boundary samples land on the image circle
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const cplx a = std::polar(rng.next_range(0.1, 0.9), rng.next_range(0.0, kTwoPi));
        const cplx b(rng.next_range(-0.05, 0.05), rng.next_range(-0.05, 0.05));
        const AffineContraction m(a, b);
        const Disk src(cplx(rng.next_range(-0.3, 0.3), 0), rng.next_range(0.1, 0.7));
        const Disk img = m.image_disk(src);
        for (int k = 0; k < 64; ++k) {
            const cplx p = m.apply(src.boundary_point(kTwoPi * k / 64.0));
            REQUIRE(std::abs(std::abs(p - img.center) - img.radius) < 1e-12);
        }
    }
}

TEST_CASE("circle pair normalization") {
    SECTION("already concentric is a translation") {
        const auto n = normalize_circle_pair(Disk(cplx(0, 0), 2.0), Disk(cplx(0, 0), 1.0));
        CHECK(n.inner_radius == Catch::Approx(1.0));
        CHECK(n.outer_radius == Catch::Approx(2.0));
        CHECK(std::abs(n.forward.apply(cplx(0.7, 0.1)) - cplx(0.7, 0.1)) < 1e-15);
    }

    SECTION("eccentric pair maps to concentric circles and preserves modulus") {
        const Disk outer(cplx(0, 0), 1.0), inner(cplx(0.3, 0), 0.2);
        const auto n = normalize_circle_pair(outer, inner);
        for (int k = 0; k < 64; ++k) {
            const double a = kTwoPi * k / 64.0;
            CHECK(std::abs(std::abs(n.forward.apply(inner.boundary_point(a))) - n.inner_radius) <
                  1e-10);
            CHECK(std::abs(std::abs(n.forward.apply(outer.boundary_point(a))) - n.outer_radius) <
                  1e-10);
        }
        const double before = oracles::ring_modulus(outer, inner);
        const double after = std::log(n.outer_radius / n.inner_radius) / kTwoPi;
        CHECK(std::abs(before - after) < 1e-3);
    }

    SECTION("modulus oracle sanity on a concentric ring") {
        const double got = oracles::ring_modulus(Disk(cplx(0, 0), 2.0), Disk(cplx(0, 0), 1.0));
        CHECK(std::abs(got - std::log(2.0) / kTwoPi) < 1e-6);
    }

    SECTION("thin ring") {
        const auto n = normalize_circle_pair(Disk(cplx(0, 0), 1.0), Disk(cplx(0, 0), 0.999));
        CHECK(n.inner_radius / n.outer_radius == Catch::Approx(0.999));
    }

    SECTION("rejects tangent and non-nested input") {
        CHECK_THROWS_AS(normalize_circle_pair(Disk(cplx(0, 0), 1.0), Disk(cplx(0.5, 0), 0.5)),
                        std::invalid_argument);
        CHECK_THROWS_AS(normalize_circle_pair(Disk(cplx(0, 0), 1.0), Disk(cplx(2, 0), 0.5)),
                        std::invalid_argument);
        CHECK_THROWS_AS(
            normalize_circle_pair(Disk(cplx(0, 0), 1.0), Disk(cplx(0.3, 0), 0.7 - 1e-12)),
            std::invalid_argument);
    }

    SECTION("round trip forward then inverse") {
        Rng rng(11);
        for (int trial = 0; trial < 8; ++trial) {
            const Disk outer(cplx(rng.next_range(-0.2, 0.2), rng.next_range(-0.2, 0.2)),
                             rng.next_range(0.8, 1.4));
            const Disk inner(
                outer.center + std::polar(rng.next_range(0.0, 0.3), rng.next_range(0.0, kTwoPi)),
                rng.next_range(0.1, 0.3));
            if (std::abs(inner.center - outer.center) + inner.radius >= outer.radius - 1e-3)
                continue;
            const auto n = normalize_circle_pair(outer, inner);
            const Mobius inv = n.forward.inverse();
            for (int k = 0; k < 256; ++k) {
                const double t = rng.next_range(0.0, kTwoPi);
                const double rho =
                    rng.next_range(inner.radius + 0.01, outer.radius - 0.01);
                const cplx z = outer.center + std::polar(rho, t);
                REQUIRE(std::abs(inv.apply(n.forward.apply(z)) - z) < 1e-10);
            }
        }
    }
}
