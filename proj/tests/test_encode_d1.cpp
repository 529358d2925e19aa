#include <doctest.h>

#include "punctlab/encode_d1.hpp"
#include "punctlab/injection.hpp"

using namespace punctlab;

namespace {

D1Config config(std::vector<Nat> values, std::vector<Stage> conv) {
    D1Config c;
    c.g = {std::move(values), std::move(conv)};
    return c;
}

}  // namespace

TEST_SUITE("encode_d1") {
    TEST_CASE("instant convergence: B's orbit x follows A's orbit x+1 within lag") {
        auto cfg = config({5, 6, 7, 8, 9, 10, 11, 12}, {0, 0, 0, 0, 0, 0, 0, 0});
        auto out = build_d1(cfg, 40);
        CHECK(check_punctuality(out.logA).pass);
        CHECK(check_punctuality(out.logB).pass);
        REQUIRE(out.stageB.size() + 1 == out.G.size());
        for (std::size_t x = 0; x < out.stageB.size(); ++x) {
            CHECK(out.stageB[x] >= out.G[x + 1]);
            CHECK(out.stageB[x] <= out.G[x + 1] + out.logB.lag);
        }
        // characters differ only in segment length and one pending orbit
        auto ca = character(decompose(truncate_all(out.logA)));
        auto cb = character(decompose(truncate_all(out.logB)));
        CHECK(ca.segment_lengths.size() == 1);
        CHECK(cb.segment_lengths.size() == 1);
        REQUIRE(ca.cycle_sizes.size() == cb.cycle_sizes.size() + 1);
        CHECK(std::equal(cb.cycle_sizes.begin(), cb.cycle_sizes.end(), ca.cycle_sizes.begin()));
    }

    TEST_CASE("g(0)=9 converging at 4: B's orbit 0 waits for max(4, G(1))") {
        auto cfg = config({9}, {4});
        cfg.gap = 1;
        auto out = build_d1(cfg, 20);
        REQUIRE(!out.stageB.empty());
        CHECK(out.G[1] == 2);
        CHECK(out.stageB[0] == 4);
        CHECK(out.orbitsB[0].size() == 2);
        auto at = [&](Elem e) { return birth_stages(out.logB)[e]; };
        CHECK(at(out.orbitsB[0][0]) >= std::max<Stage>(4, out.G[1]));
    }

    TEST_CASE("horizon too small for orbit 0") {
        auto cfg = config({1}, {0});
        cfg.first = 10;
        CHECK_THROWS_AS(build_d1(cfg, 10), ConfigError);
    }

    TEST_CASE("delay invariant, monotone G, punctuality on scripted configs") {
        auto cfg = config({3, 1, 4, 1, 5, 9, 2, 6, 5, 3}, {7, 0, 30, 2, 2, 50, 0, 0, 61, 5});
        auto out = build_d1(cfg, 200);
        CHECK(check_punctuality(out.logA).pass);
        CHECK(check_punctuality(out.logB).pass);
        for (std::size_t x = 1; x < out.G.size(); ++x) CHECK(out.G[x] > out.G[x - 1]);
        auto bornB = birth_stages(out.logB);
        auto bornA = birth_stages(out.logA);
        for (std::size_t x = 0; x < out.orbitsB.size(); ++x) {
            Stage sb = bornB[out.orbitsB[x][0]];
            CHECK(sb >= cfg.g.convergence(x));
            CHECK(sb >= bornA[out.orbitsA[x + 1][0]]);
        }
    }

    TEST_CASE("decode with the canonical isomorphism") {
        auto cfg = config({3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8}, {7, 0, 30, 2, 2, 50, 0, 0, 61, 5, 9, 9});
        auto out = build_d1(cfg, 200);
        OrbitTimeline tl(out.logA);
        auto h = canonical_map(out.canonical);
        for (Nat x = 0; x < 10; ++x) {
            auto [gx, Gnext] = decode_d1(h, x, out.G[0], cfg.g, tl);
            CHECK(gx == cfg.g.value(x));
            CHECK(Gnext == out.G[x + 1]);
        }
        auto zero = config({4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4}, std::vector<Stage>(11, 0));
        auto z = build_d1(zero, 60);
        auto hz = canonical_map(z.canonical);
        for (Nat x = 0; x < 10; ++x) CHECK(decode_d1(hz, x, z.G[0], zero.g, z.logA).first == 4);
    }

    TEST_CASE("decode rejects a map that is not an isomorphism restriction") {
        auto cfg = config({3, 1}, {40, 0});
        auto out = build_d1(cfg, 100);
        ElemMap id = [](Elem a) { return a; };
        CHECK_THROWS_AS(decode_d1(id, 0, out.G[0], cfg.g, out.logA), Error);
    }

    TEST_CASE("decode agrees for every brute-forced anchor assignment") {
        auto cfg = config({2, 7, 1, 8, 2, 8, 1, 8}, {12, 3, 0, 40, 0, 0, 22, 1});
        auto out = build_d1(cfg, 120);
        OrbitIndex ia(truncate_all(out.logA)), ib(truncate_all(out.logB));
        OrbitTimeline tl(out.logA);
        for (Nat x = 0; x < 6; ++x) {
            std::vector<Elem> anchors{out.orbitsA[0][0], out.orbitsA[x][0], out.orbitsA[x + 1][0]};
            if (x == 0) anchors = {out.orbitsA[0][0], out.orbitsA[1][0]};
            auto cands = match_candidates(ia, ib, anchors);
            REQUIRE_FALSE(cands.truncated);
            REQUIRE_FALSE(cands.maps.empty());
            for (const auto& img : cands.maps) {
                auto table = extend_candidate(ia, ib, anchors, img, out.canonical);
                auto h = canonical_map(table);
                auto [gx, Gn] = decode_d1(h, x, out.G[0], cfg.g, tl);
                CHECK(gx == cfg.g.value(x));
                CHECK(Gn == out.G[x + 1]);
                // decoder soundness: max image index over the first x+1 orbits clears both stages
                Nat m = 0;
                for (Nat i = 0; i <= x; ++i)
                    for (Elem a : out.orbitsA[i]) m = std::max<Nat>(m, table[a]);
                CHECK(m >= std::max<Nat>(cfg.g.convergence(x), out.G[x + 1]));
            }
        }
    }
}
