#include <doctest.h>

#include <algorithm>
#include <cstdint>

#include "punctlab/encode_d2.hpp"
#include "punctlab/injection.hpp"

using namespace punctlab;

namespace {

struct Lcg {
    std::uint64_t state;
    std::uint64_t next(std::uint64_t bound) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return (state >> 33) % bound;
    }
};

Approx2 random_approx(Lcg& rng, std::size_t rows, std::size_t max_changes, Stage max_stage) {
    Approx2 g;
    for (std::size_t x = 0; x < rows; ++x) {
        Schedule sc;
        sc.init = rng.next(4);
        std::size_t k = rng.next(max_changes + 1);
        Stage st = 0;
        Nat v = sc.init;
        for (std::size_t c = 0; c < k; ++c) {
            st += 1 + static_cast<Stage>(rng.next(max_stage / (max_changes + 1) + 1));
            v = v + 1 + rng.next(3);
            sc.changes.push_back({st, v});
        }
        g.rows.push_back(sc);
    }
    return g;
}

// Last stage at which the builder rebases chains of index >= i: the latest change of some
// x < i scheduled after stage x (earlier changes precede chain x+1 and are never acted on).
Stage settle_stage(const Approx2& g, Nat i) {
    Stage last = 0;
    for (Nat x = 0; x < i && x < g.rows.size(); ++x)
        for (Stage st : g.mind_changes(x))
            if (st > x) last = std::max(last, st);
    return last;
}

Approx2 one_change_at_7() {
    Approx2 g;
    g.rows.resize(3);
    g.rows[0] = {2, {{7, 5}}};
    g.rows[1] = {1, {}};
    g.rows[2] = {4, {}};
    return g;
}

std::size_t family_segments(const BuildOutputD2& out, Stage s) {
    auto d = decompose(truncate(out.logB, s + 1));
    std::size_t n = 0;
    for (const auto& sg : d.segments)
        if (out.familyB[sg[0]]) ++n;
    return n;
}

}  // namespace

TEST_SUITE("encode_d2") {
    TEST_CASE("no mind changes: heads keep their first element") {
        Approx2 g;
        g.rows = {{3, {}}, {1, {}}, {4, {}}};
        for (auto v : {D2Variant::omega, D2Variant::zeta}) {
            auto out = build_d2({g, v, 0, {}}, 40);
            CHECK(out.glues.empty());
            CHECK(check_punctuality(out.logA).pass);
            CHECK(check_punctuality(out.logB).pass);
            for (std::size_t i = 0; i < 40; ++i) CHECK(out.markers.get(i, 39).base == out.markers.get(i, i).base);
            auto ca = character(decompose(truncate_all(out.logA)));
            auto cb = character(decompose(truncate_all(out.logB)));
            CHECK(ca.cycle_sizes == cb.cycle_sizes);
            CHECK(ca.segment_lengths.size() == cb.segment_lengths.size());
        }
    }

    TEST_CASE("single mind change for x=0 at stage 7") {
        auto g = one_change_at_7();
        auto out = build_d2({g, D2Variant::omega, 0, {}}, 30);
        REQUIRE(out.glues.size() == 1);
        CHECK(out.glues[0].stage == 7);
        CHECK(out.glues[0].x == 0);
        for (Stage s = 7; s < 30; ++s)
            for (std::size_t i = 1; i <= s; ++i) CHECK(out.markers.get(i, s).l >= 7);
        CHECK(out.markers.get(0, 29).l == out.markers.get(0, 0).l);
        auto h = canonical_map(out.canonical);
        CHECK(decode_d2(h, g, 0, out.a_anchors) == 5);
        CHECK(decode_d2(h, g, 1, out.a_anchors) == 1);
        CHECK(decode_d2(h, g, 2, out.a_anchors) == 4);
    }

    TEST_CASE("zeta variant: open encoding segments grow on both ends") {
        Lcg rng{11};
        for (int rep = 0; rep < 4; ++rep) {
            auto g = random_approx(rng, 6, 3, 30);
            auto out = build_d2({g, D2Variant::zeta, 2, {{3, 2}, {4, 5}}}, 36);
            CHECK(check_punctuality(out.logB).pass);
            for (Stage s = 0; s + 1 < 36; ++s) {
                auto t0 = truncate(out.logB, s + 1);
                auto t1 = truncate(out.logB, s + 2);
                std::vector<char> has_pre(t1.size, 0);
                for (Elem e = 0; e < t1.size; ++e)
                    if (t1.map()[e] != kNone) has_pre[t1.map()[e]] = 1;
                for (const auto& sg : decompose(t0).segments) {
                    if (!out.familyB[sg[0]]) continue;
                    CHECK(has_pre[sg.front()]);
                    CHECK(t1.map()[sg.back()] != kNone);
                }
            }
        }
    }

    TEST_CASE("endpoint stabilization matches the schedule exactly") {
        Lcg rng{2024};
        for (int rep = 0; rep < 12; ++rep) {
            auto g = random_approx(rng, 15, 5, 80);
            auto v = rep % 2 ? D2Variant::zeta : D2Variant::omega;
            const Stage H = 120;
            auto out = build_d2({g, v, 1, {}}, H);
            for (Nat i = 0; i < 20; ++i) {
                Stage L = std::max<Stage>(settle_stage(g, i), static_cast<Stage>(i));
                for (Stage s = L; s < H; ++s) CHECK(out.markers.get(i, s).base == out.markers.get(i, H - 1).base);
                if (L > i) CHECK(out.markers.get(i, L - 1).base != out.markers.get(i, L).base);
                // head-index encoding
                CHECK(out.markers.get(i, H - 1).base >= L);
            }
            if (v == D2Variant::omega)
                for (Stage s = 0; s < H; ++s) CHECK(out.markers.get(0, s).l == out.markers.get(0, 0).l);
        }
    }

    TEST_CASE("chain count: s+1 encoding segments after stage s") {
        Lcg rng{5};
        auto g = random_approx(rng, 8, 4, 40);
        for (auto v : {D2Variant::omega, D2Variant::zeta}) {
            auto out = build_d2({g, v, 2, {{1, 3}}}, 50);
            for (Stage s = 0; s < 50; ++s) CHECK(family_segments(out, s) == s + 1);
        }
    }

    TEST_CASE("canonical correspondence preserves f where defined") {
        Lcg rng{77};
        for (auto v : {D2Variant::omega, D2Variant::zeta}) {
            auto g = random_approx(rng, 10, 4, 50);
            auto out = build_d2({g, v, 2, {{2, 4}, {3, 9}}}, 70);
            auto fa = truncate_all(out.logA).map();
            auto fb = truncate_all(out.logB).map();
            std::vector<char> hit(fb.size(), 0);
            for (Elem a = 0; a < fa.size(); ++a) {
                Elem b = out.canonical[a];
                if (b == kNone) continue;
                CHECK_FALSE(hit[b]);
                hit[b] = 1;
                CHECK(out.familyA[a] == out.familyB[b]);
                if (fa[a] != kNone && out.canonical[fa[a]] != kNone && fb[b] != kNone)
                    CHECK(out.canonical[fa[a]] == fb[b]);
            }
            for (Elem a : out.a_anchors) CHECK(out.canonical[a] != kNone);
        }
    }

    TEST_CASE("decode with the canonical correspondence, both variants") {
        Lcg rng{31337};
        for (int rep = 0; rep < 10; ++rep) {
            auto g = random_approx(rng, 15, 5, 150);
            for (auto v : {D2Variant::omega, D2Variant::zeta}) {
                auto out = build_d2({g, v, 1, {{4, 3}}}, 200);
                auto h = canonical_map(out.canonical);
                for (Nat x = 0; x < 15; ++x) CHECK(decode_d2(h, g, x, out.a_anchors) == g.limit(x));
            }
        }
    }

    TEST_CASE("decode for every anchor assignment, omega variant") {
        Lcg rng{99};
        for (int rep = 0; rep < 6; ++rep) {
            auto g = random_approx(rng, 3, 2, 7);
            const Stage H = 9;
            auto out = build_d2({g, D2Variant::omega, 1, {}}, H);
            auto ta = truncate_all(out.logA);
            auto tb = truncate_all(out.logB);
            for (Nat x = 0; x <= 2; ++x) {
                std::vector<Elem> anchors(out.a_anchors.begin(), out.a_anchors.begin() + x + 2);
                MatchOptions opt;
                opt.admissible = [&](std::size_t, Elem b) { return out.familyB[b] != 0; };
                auto res = match_candidates(ta, tb, anchors, opt);
                REQUIRE_FALSE(res.truncated);
                REQUIRE(!res.maps.empty());
                CHECK(std::find(res.maps.begin(), res.maps.end(),
                                std::vector<Elem>([&] {
                                    std::vector<Elem> c;
                                    for (Elem a : anchors) c.push_back(out.canonical[a]);
                                    return c;
                                }())) != res.maps.end());
                for (const auto& imgs : res.maps) {
                    auto h = [&](Elem a) {
                        for (std::size_t k = 0; k < anchors.size(); ++k)
                            if (anchors[k] == a) return imgs[k];
                        return kNone;
                    };
                    CHECK(decode_d2(h, g, x, out.a_anchors) == g.limit(x));
                }
            }
        }
    }

    TEST_CASE("decode for every anchor assignment, zeta variant") {
        Lcg rng{4242};
        for (int rep = 0; rep < 4; ++rep) {
            auto g = random_approx(rng, 2, 2, 6);
            const Stage H = 8;
            auto out = build_d2({g, D2Variant::zeta, 1, {}}, H);
            std::vector<Elem> anchors(out.a_anchors.begin(), out.a_anchors.begin() + 2);
            MatchOptions opt;
            opt.free_segments = true;
            opt.admissible = [&](std::size_t, Elem b) { return out.familyB[b] != 0; };
            auto res = match_candidates(truncate_all(out.logA), truncate_all(out.logB), anchors, opt);
            REQUIRE_FALSE(res.truncated);
            for (const auto& imgs : res.maps) {
                auto h = [&](Elem a) { return a == anchors[0] ? imgs[0] : imgs[1]; };
                CHECK(decode_d2(h, g, 0, out.a_anchors) == g.limit(0));
            }
        }
    }

    TEST_CASE("punctual at horizon 2000 and marker dump") {
        Lcg rng{8};
        auto g = random_approx(rng, 15, 5, 1500);
        for (auto v : {D2Variant::omega, D2Variant::zeta}) {
            auto out = build_d2({g, v, 3, {{10, 4}, {50, 7}}}, 2000);
            CHECK(check_punctuality(out.logA).pass);
            CHECK(check_punctuality(out.logB).pass);
        }
        auto small = build_d2({g, D2Variant::omega, 0, {}}, 5);
        auto dump = markers_jsonl(small.markers);
        CHECK(std::count(dump.begin(), dump.end(), '\n') == 5);
        CHECK(dump.rfind("{\"stage\":0,\"chains\":[[", 0) == 0);
    }

    TEST_CASE("decoder needs x+2 anchors") {
        Approx2 g;
        std::vector<Elem> anchors{0};
        CHECK_THROWS_AS(decode_d2([](Elem a) { return a; }, g, 0, anchors), Error);
    }
}
