#include <catch2/catch_amalgamated.hpp>

#include "ifsjulia/quad.hpp"
#include "ifsjulia/rng.hpp"
#include "oracles.hpp"

using namespace ifsjulia;

TEST_CASE("glue quadratic construction") {
    SECTION("real pair") {
        const auto q = build_quadratic(cplx(-0.5, 0), cplx(0.5, 0));
        CHECK(q.w == cplx(0, 0));
        CHECK(std::abs(q.a - cplx(40, 0)) < 1e-12);
        CHECK(q.z1 == cplx(-0.5, 0));
        CHECK(q.z2 == cplx(0.5, 0));
        CHECK(q.half_zero_distance() == Catch::Approx(0.5));
        CHECK(std::abs(q.eval(cplx(0.5, 0))) < 1e-12);   // a*(1/4) - 10 = 0
        CHECK(std::abs(q.eval(cplx(-0.5, 0))) < 1e-12);
    }
    SECTION("rotated pair: squaring the quarter turn flips the sign of a") {
        const auto q = build_quadratic(cplx(0, -0.5), cplx(0, 0.5));
        CHECK(std::abs(q.a - cplx(-40, 0)) < 1e-12);
        CHECK(std::abs(q.eval(q.z1)) < 1e-12);
        CHECK(std::abs(q.eval(q.z2)) < 1e-12);
    }
    SECTION("translated pair") {
        const auto q = build_quadratic(cplx(0, 0), cplx(1, 0));
        CHECK(q.w == cplx(0.5, 0));
        CHECK(std::abs(q.a - cplx(40, 0)) < 1e-12);
        CHECK(std::abs(q.eval(cplx(0, 0))) < 1e-12);
        CHECK(std::abs(q.eval(cplx(1, 0))) < 1e-12);
    }
    SECTION("coincident inputs rejected") {
        CHECK_THROWS_AS(build_quadratic(cplx(0.1, 0), cplx(0.1, 0)), std::invalid_argument);
    }
    SECTION("zeros vanish for random pairs") {
        Rng rng(17);
        for (int i = 0; i < 1000; ++i) {
            const cplx wi(rng.next_range(-0.9, 0.9), rng.next_range(-0.9, 0.9));
            const cplx wj(rng.next_range(-0.9, 0.9), rng.next_range(-0.9, 0.9));
            if (std::abs(wi - wj) < 1e-3) continue;
            const auto q = build_quadratic(wi, wj);
            REQUIRE(std::abs(q.eval(q.z1)) < 1e-10);
            REQUIRE(std::abs(q.eval(q.z2)) < 1e-10);
            REQUIRE(q.r_star > 0.0);
        }
    }
}

TEST_CASE("quadratic evaluation") {
    const auto q = build_quadratic(cplx(-0.5, 0), cplx(0.5, 0));
    CHECK(q.eval(cplx(0, 0)) == cplx(-10, 0));
    CHECK(std::abs(q.eval(q.z1)) < 1e-12);
    CHECK(q.eval(cplx(2, 0)) == cplx(150, 0));
}

TEST_CASE("figure eight") {
    const auto q = build_quadratic(cplx(-0.5, 0), cplx(0.5, 0));
    const auto fig = figure_eight(q, 512);

    SECTION("crossing point") {
        CHECK(fig.lobe1.front() == q.w);
        CHECK(fig.lobe1.back() == q.w);
        CHECK(fig.lobe2.front() == q.w);
    }

    SECTION("every traced point lies on |p| = 10") {
        for (const auto& z : fig.lobe1)
            if (z != q.w) REQUIRE(std::abs(std::abs(q.eval(z)) - 10.0) < 1e-9);
    }

    SECTION("pi-rotation symmetry about w") {
        std::vector<cplx> rotated;
        for (const auto& z : fig.polyline()) rotated.push_back(2.0 * q.w - z);
        CHECK(oracles::hausdorff_brute(fig.polyline(), rotated) < 1e-6);
    }

    SECTION("zeros in distinct lobes") {
        CHECK(std::abs(winding_number(fig.lobe1, q.z1)) == 1);
        CHECK(winding_number(fig.lobe1, q.z2) == 0);
        CHECK(std::abs(winding_number(fig.lobe2, q.z2)) == 1);
        CHECK(winding_number(fig.lobe2, q.z1) == 0);
        // cross-check with an implementation-independent point-in-polygon test
        CHECK(oracles::point_in_polygon(fig.lobe1, q.z1));
        CHECK_FALSE(oracles::point_in_polygon(fig.lobe1, q.z2));
    }

    SECTION("axis slope is tan(-arg(a)/2)") {
        CHECK(std::abs(std::tan(-std::arg(q.a) / 2.0)) < 1e-12);
        const cplx dir = q.z2 - q.z1;
        CHECK(std::abs(dir.imag() / dir.real()) < 1e-12);
    }

    SECTION("axis slope after rotating the configuration") {
        const cplx rot = std::polar(1.0, kPi / 4.0);
        const auto qr = build_quadratic(rot * cplx(-0.5, 0), rot * cplx(0.5, 0));
        const cplx dir = qr.z2 - qr.z1;
        const double slope = dir.imag() / dir.real();
        // the two-zero line angle must match -arg(a)/2 modulo pi
        const double want = std::tan(-std::arg(qr.a) / 2.0);
        CHECK(std::abs(slope - want) < 1e-6);
        const auto figr = figure_eight(qr, 512);
        CHECK(std::abs(winding_number(figr.lobe1, qr.z1)) == 1);
        CHECK(winding_number(figr.lobe1, qr.z2) == 0);
    }
}

TEST_CASE("disk bound around the zeros") {
    const auto q = build_quadratic(cplx(-0.5, 0), cplx(0.5, 0));

    SECTION("eps = 1/5 attains max 2") {
        const auto rep = check_disk_bound(q, 0.2);
        CHECK(rep.pass);
        CHECK(rep.max_abs_p == Catch::Approx(2.0).margin(1e-6));
    }
    SECTION("eps = 1/20 attains max 0.5") {
        const auto rep = check_disk_bound(q, 0.05);
        CHECK(rep.pass);
        CHECK(rep.max_abs_p == Catch::Approx(0.5).margin(1e-6));
    }
    SECTION("small eps limit") {
        const auto rep = check_disk_bound(q, 1e-9);
        CHECK(rep.radius < 1e-9);
        CHECK(rep.max_abs_p < 1e-7);
        CHECK(rep.pass);
    }
    SECTION("bound attained for random pairs across eps") {
        Rng rng(5);
        for (double eps : {0.01, 0.05, 0.2, 1.0}) {
            for (int i = 0; i < 50; ++i) {
                const cplx wi(rng.next_range(-0.8, 0.8), rng.next_range(-0.8, 0.8));
                const cplx wj(rng.next_range(-0.8, 0.8), rng.next_range(-0.8, 0.8));
                if (std::abs(wi - wj) < 0.05) continue;
                const auto rep = check_disk_bound(build_quadratic(wi, wj), eps);
                REQUIRE(rep.pass);
                REQUIRE(rep.max_abs_p >= 10.0 * eps - 1e-6);
                REQUIRE(rep.max_abs_p <= 10.0 * eps + 1e-9);
            }
        }
    }
}

TEST_CASE("containment against a separation plan") {
    ConformalIFS ifs;
    ifs.label = "pair";
    ifs.maps.emplace_back(cplx(0.5, 0), cplx(0.25, 0));
    ifs.maps.emplace_back(cplx(0.5, 0), cplx(-0.25, 0));
    const auto plan = build_separation_plan(ifs, 0.005);
    const auto q = build_quadratic(plan.f1().fixed_point(), plan.f2().fixed_point());

    SECTION("valid plan passes with positive margins") {
        const auto rep = validate_containment(q, plan);
        CHECK(rep.pass());
        CHECK(rep.unit_margin > 0.0);
        CHECK(rep.radius_margin > 0.0);
        CHECK(rep.ring_gap_margin > 0.0);
    }

    SECTION("delta at the boundary value fails the ring inequality marginally") {
        SeparationPlan tight = plan;
        tight.delta = 0.0218;
        tight.d_lower = (0.5 - 2.0 * tight.delta) * tight.r;
        const auto rep = validate_containment(q, tight);
        CHECK_FALSE(rep.ring_gap_ok);
        CHECK(rep.ring_gap_margin < 0.0);
        CHECK(rep.ring_gap_margin > -1e-3);  // marginal, not gross
        CHECK_FALSE(rep.pass());
        CHECK_THAT(rep.failure(), Catch::Matchers::ContainsSubstring("sqrt(6/5)"));
    }

    SECTION("fixed points near the boundary break the unit-disk containment") {
        SeparationPlan far = plan;
        far.T = 1.0 - 1e-6;
        const auto rep = validate_containment(q, far);
        CHECK_FALSE(rep.inside_unit);
        CHECK_THAT(rep.failure(), Catch::Matchers::ContainsSubstring("unit disk"));
    }
}
