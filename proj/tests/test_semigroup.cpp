#include <catch2/catch_amalgamated.hpp>

#include "ifsjulia/semigroup.hpp"
#include "oracles.hpp"

using namespace ifsjulia;

namespace {

ConformalIFS symmetric_pair() {
    ConformalIFS ifs;
    ifs.label = "pair";
    ifs.maps.emplace_back(cplx(0.5, 0), cplx(0.25, 0));
    ifs.maps.emplace_back(cplx(0.5, 0), cplx(-0.25, 0));
    return ifs;
}

ConformalIFS cantor_thirds() {
    ConformalIFS ifs;
    ifs.label = "cantor";
    ifs.maps.emplace_back(cplx(1.0 / 3, 0), cplx(-0.5, 0));
    ifs.maps.emplace_back(cplx(1.0 / 3, 0), cplx(0.5, 0));
    return ifs;
}

}  // namespace

TEST_CASE("generator assembly") {
    const auto plan = build_separation_plan(symmetric_pair(), 0.005);
    const auto g = build_generator(plan, plan.f2_index);

    SECTION("zeros sit at the separated fixed points") {
        CHECK(std::abs(g.quad.z1 - cplx(0.5, 0)) < 1e-12);
        CHECK(std::abs(g.quad.z2 - cplx(-0.5, 0)) < 1e-12);
    }

    SECTION("seams agree across every piece boundary") {
        const auto rep = audit_generator_seams(g, 512);
        CHECK(rep.worst < 1e-6);
    }

    SECTION("the fixed point persists under the inverse branch") {
        const cplx wj = g.branch_j.fixed_point();
        const auto v = g.evaluate(wj);
        CHECK(v.piece == GenPiece::InverseBranch);
        CHECK(std::abs(v.value - wj) < 1e-12);
    }

    SECTION("far outside, the quadratic piece rules and grows the modulus") {
        const auto v = g.evaluate(cplx(3.0, 0));
        CHECK(v.piece == GenPiece::Quadratic);
        CHECK(std::abs(v.value) > 10.0);
        const auto v2 = g.evaluate(g.quad.z1 + cplx(100.0, 0));
        CHECK(v2.piece == GenPiece::Quadratic);
    }

    SECTION("seam points return the priority piece but both sides agree") {
        for (int k = 0; k < 64; ++k) {
            // strictly inside: the inverse branch wins the dispatch
            const double a = kTwoPi * k / 64.0;
            const cplx inside =
                g.domain_i.center + (g.domain_i.radius * (1.0 - 1e-9)) * std::polar(1.0, a);
            CHECK(g.evaluate(inside).piece == GenPiece::InverseBranch);
            // on the seam circle both pieces agree regardless of rounding
            const cplx z = g.domain_i.boundary_point(a);
            CHECK(std::abs(g.evaluate(z).value - g.ring_i().evaluate(z)) < 1e-6);
            CHECK(std::abs(g.evaluate(z).value - g.branch_i.apply_inverse(z)) < 1e-6);
        }
    }

    SECTION("rings pass the homeomorphism proxy") {
        CHECK(g.ring_i().homeomorphism_check().ok);
        CHECK(g.ring_j().homeomorphism_check().ok);
    }
}

TEST_CASE("orbits") {
    const auto plan = build_separation_plan(cantor_thirds(), 0.005);
    const auto gens = build_all_generators(plan);
    const auto cloud = attractor_chaos_game(cantor_thirds(), 2000, 64, 4);

    SECTION("attractor samples follow inverse branches for the precision horizon") {
        // Exact attractor points never leave the branch structure, but the
        // branch inverses are repelling: they amplify the sample's rounding
        // error by 1/s^N per step, so a double-precision sample is guaranteed
        // to shadow the true orbit only for about log(margin/1e-14)/log(3^5)
        // steps. Check branch-following up to that horizon.
        const double expansion = 1.0 / std::pow(plan.iterated.max_factor(), 1.0);
        const std::size_t horizon = static_cast<std::size_t>(
            std::log(1e-3 / 1e-13) / std::log(expansion));
        REQUIRE(horizon >= 3);
        WordPolicy policy;
        policy.kind = WordPolicy::Kind::RandomAdmissible;
        for (int i = 0; i < 50; ++i) {
            policy.seed = 1000 + i;
            const auto trace = run_orbit(gens, policy, cloud.points[i * 37], 200);
            for (std::size_t t = 0; t < horizon; ++t) {
                REQUIRE(trace.pieces[t] == GenPiece::InverseBranch);
                REQUIRE(std::abs(trace.points[t + 1]) <= 1.0 + 1e-12);
            }
            if (trace.escaped) REQUIRE(trace.escape_index.value() >= horizon);
        }
    }

    SECTION("points outside the disk escape within 3 steps") {
        WordPolicy policy;
        policy.kind = WordPolicy::Kind::RandomUniform;
        policy.seed = 5;
        const auto trace = run_orbit(gens, policy, cplx(5.0, 0), 50);
        REQUIRE(trace.escaped);
        CHECK(trace.escape_index.value() < 3);
    }

    SECTION("at most one interpolated step before escape, then quadratic forever") {
        std::size_t checked = 0;
        for (int i = 0; i < 10000; ++i) {
            WordPolicy policy;
            policy.kind = WordPolicy::Kind::RandomUniform;
            policy.seed = 77 + i;
            Rng pos(i);
            const cplx z0(pos.next_range(-1.2, 1.2), pos.next_range(-1.2, 1.2));
            const auto trace = run_orbit(gens, policy, z0, 40);
            REQUIRE(trace.interpolated_steps_before_escape() <= 1);
            // once the orbit leaves the closed unit disk every later piece is
            // the analytic quadratic
            bool outside = false;
            for (std::size_t t = 0; t < trace.pieces.size(); ++t) {
                if (outside) REQUIRE(trace.pieces[t] == GenPiece::Quadratic);
                if (std::abs(trace.points[t + 1]) > 1.0) outside = true;
            }
            ++checked;
        }
        CHECK(checked == 10000);
    }

    SECTION("fixed words cycle deterministically") {
        WordPolicy policy;
        policy.kind = WordPolicy::Kind::Fixed;
        policy.fixed_word = {0, 1, 2};
        const auto a = run_orbit(gens, policy, cplx(0.1, 0.1), 30);
        const auto b = run_orbit(gens, policy, cplx(0.1, 0.1), 30);
        CHECK(a.points == b.points);
        CHECK(a.word[0] == 0);
        CHECK(a.word[1] == 1);
        CHECK(a.word[2] == 2);
    }

    SECTION("escape radius below the derived bound is rejected") {
        WordPolicy policy;
        CHECK_THROWS_AS(run_orbit(gens, policy, cplx(0, 0), 10, 5.0), std::invalid_argument);
    }
}

TEST_CASE("degree probe") {
    const auto plan = build_separation_plan(symmetric_pair(), 0.005);
    const auto g = build_generator(plan, 0);
    CHECK(degree_check(g) == 2);
    CHECK(circle_winding([&](const cplx& z) { return g.quad.eval(z); }) == 2);
    // negative control: an affine map has winding one
    const AffineContraction aff(cplx(0.5, 0.2), cplx(0.1, 0));
    CHECK(circle_winding([&](const cplx& z) { return aff.apply(z); }) == 1);
}

TEST_CASE("julia estimation matches the attractor cloud") {
    const auto ifs = cantor_thirds();
    const auto plan = build_separation_plan(ifs, 0.005);
    const auto gens = build_all_generators(plan);
    const auto cloud = attractor_chaos_game(ifs, 100000, 64, 7);
    const Window window;
    const auto mask = julia_estimate_grid(gens, window, 256, 64, 1, 9);
    REQUIRE(mask.marked_count() > 0);
    const double hd = hausdorff_distance(mask.marked_points(), cloud.points) / mask.pixel_size();
    CHECK(hd < 3.0);

    SECTION("points outside the attractor escape under every word") {
        // pixel at z = 0.9: between the two branch families, outside S
        std::size_t ix, iy;
        REQUIRE(mask.locate(cplx(0.9, 0), ix, iy));
        CHECK(mask.at(ix, iy) == 0);
    }

    SECTION("no solid 3x3 blocks for a totally disconnected attractor") {
        std::size_t solid = 0;
        for (std::size_t y = 1; y + 1 < mask.res; ++y)
            for (std::size_t x = 1; x + 1 < mask.res; ++x) {
                bool all = true;
                for (int dy = -1; dy <= 1 && all; ++dy)
                    for (int dx = -1; dx <= 1 && all; ++dx)
                        all = mask.at(x + dx, y + dy) != 0;
                solid += all ? 1 : 0;
            }
        CHECK(solid == 0);
    }

    SECTION("deterministic masks for a fixed seed") {
        const auto again = julia_estimate_grid(gens, window, 256, 64, 1, 9);
        CHECK(mask.cells == again.cells);
    }
}

TEST_CASE("ring distortion does not accumulate over compositions") {
    const auto plan = build_separation_plan(cantor_thirds(), 0.005);
    const auto gens = build_all_generators(plan);

    double single = 1.0;
    for (const auto& g : gens)
        single = std::max(single, merge_reports(ring_distortion(g.ring_i(), 6, 48),
                                                ring_distortion(g.ring_j(), 6, 48))
                                      .k_estimate);

    // three-step words sampled at ring interiors; stencil stays inside one
    // piece chain so the finite differences see a clean composition
    double composed = 1.0;
    Rng rng(123);
    const double h = 1e-6;
    for (int trial = 0; trial < 400; ++trial) {
        const auto& g1 = gens[rng.next_index(gens.size())];
        const std::size_t j2 = rng.next_index(gens.size());
        const std::size_t j3 = rng.next_index(gens.size());
        const auto& ring = (trial % 2 == 0) ? g1.ring_i() : g1.ring_j();
        const cplx z = ring.source_point(rng.next_range(0.15, 0.85), rng.next_range(0.0, kTwoPi));
        auto comp = [&](const cplx& p) {
            return gens[j3].evaluate(gens[j2].evaluate(g1.evaluate(p).value).value).value;
        };
        auto tags = [&](const cplx& p) {
            const auto v1 = g1.evaluate(p);
            const auto v2 = gens[j2].evaluate(v1.value);
            const auto v3 = gens[j3].evaluate(v2.value);
            return std::array<GenPiece, 3>{v1.piece, v2.piece, v3.piece};
        };
        const auto t0 = tags(z);
        bool pure = true;
        for (const cplx off : {cplx(h, 0), cplx(-h, 0), cplx(0, h), cplx(0, -h)})
            pure = pure && tags(z + off) == t0;
        if (!pure) continue;
        const auto rep = beltrami_estimate(comp, {z}, 1e-6);
        if (rep.n_samples > 0) composed = std::max(composed, rep.k_estimate);
    }
    CHECK(composed <= single * 1.05);
    CHECK(composed >= single * 0.5);  // the sampling really visited the rings
}
