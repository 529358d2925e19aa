#include <doctest.h>

#include <algorithm>
#include <set>

#include "punctlab/pressing.hpp"

using namespace punctlab;

namespace {

PressOpponentSpec copier(Stage delay, bool mirror = false) {
    PressOpponentSpec s;
    s.delay = delay;
    s.mirror = mirror;
    return s;
}

PressOpponentSpec extra(PressOpponentKind k, Stage delay, Nat size, Stage at) {
    PressOpponentSpec s;
    s.kind = k;
    s.delay = delay;
    s.size = size;
    s.at = at;
    return s;
}

const PressEvent* find_event(const PressOutput& out, PressEvent::Kind k, std::size_t e) {
    for (const auto& ev : out.trace)
        if (ev.kind == k && ev.e == e) return &ev;
    return nullptr;
}

// Only the leading stages before a copier has anything to copy may be empty.
void check_opponent_punctual(const StructureLog& log, Stage delay) {
    auto r = check_punctuality(log, 1000);
    for (const auto& v : r.violations) {
        CHECK(v.kind == Violation::Kind::empty_stage);
        CHECK(v.stage < delay);
    }
}

bool is_hom_bijection(const Truncation& a, const Truncation& b, const std::vector<std::pair<Elem, Elem>>& pairs) {
    std::map<Elem, Elem> fw;
    std::set<Elem> img;
    for (auto [u, v] : pairs) {
        if (!fw.emplace(u, v).second || !img.insert(v).second) return false;
    }
    for (auto [u, v] : pairs)
        for (std::uint8_t f = 0; f < 4; ++f) {
            auto it = fw.find(a.map(f)[u]);
            if (it == fw.end() || it->second != b.map(f)[v]) return false;
        }
    return true;
}

}  // namespace

TEST_SUITE("pressing") {
    TEST_CASE("first sizes and M") {
        CHECK(press_M(0) == 0);
        CHECK(press_M(3) == 12);
        PressConfig c;
        c.opponents = {copier(1)};
        auto out = build_pressing(c, 40);
        REQUIRE(out.components.size() > 3);
        CHECK(out.components[0].x == 1);
        for (const auto& k : out.components) CHECK(k.x < press_M(k.e + 1));
        CHECK(out.statuses[0].state == OpponentState::active);
    }

    TEST_CASE("horizon too small") {
        PressConfig c;
        c.opponents = {copier(5)};
        CHECK_THROWS_AS(build_pressing(c, 3), Error);
    }

    TEST_CASE("pender goes pending then inactive with a new size") {
        PressConfig c;
        c.opponents = {extra(PressOpponentKind::pender, 6, 5, 0)};
        auto out = build_pressing(c, 60);
        const auto* p = find_event(out, PressEvent::Kind::pending, 0);
        REQUIRE(p);
        CHECK(p->level == 0);
        CHECK(p->bound == press_M(1));
        const auto& st = out.statuses[0];
        CHECK(st.state == OpponentState::inactive);
        CHECK(st.reason == "new-size");
        CHECK(st.size == 5);
        bool retired = false;
        for (auto [m, s] : out.retired) retired |= m == 5 && s >= p->stage;
        CHECK(retired);
        for (const auto& a : out.allocations) CHECK(a.size != 5);
    }

    TEST_CASE("a pender that never closes stays pending") {
        PressConfig c;
        c.opponents = {extra(PressOpponentKind::pender, 6, 0, 0)};
        auto out = build_pressing(c, 200);
        CHECK(out.statuses[0].state == OpponentState::pending);
        CHECK(check_pressing(out).pass());
    }

    TEST_CASE("faker is caught with a new size") {
        PressConfig c;
        c.opponents = {extra(PressOpponentKind::faker, 1, 3, 1), copier(2)};
        auto out = build_pressing(c, 80);
        CHECK(out.statuses[0].state == OpponentState::inactive);
        CHECK(out.statuses[0].reason == "new-size");
        CHECK(out.statuses[0].size == 3);
        CHECK(out.statuses[1].state == OpponentState::active);
        for (const auto& a : out.allocations) CHECK(a.size != 3);
    }

    TEST_CASE("isolated points are caught by multiplicity") {
        PressConfig c;
        c.opponents = {extra(PressOpponentKind::points, 1, 0, 0)};
        auto out = build_pressing(c, 40);
        CHECK(out.statuses[0].state == OpponentState::inactive);
        CHECK(out.statuses[0].reason == "multiplicity");
        CHECK(out.statuses[0].size == 1);
    }

    TEST_CASE("W = {0@6} switches component 1 once 0 enters") {
        PressConfig c;
        c.W.entries = {{0, 6}};
        c.opponents = {copier(1)};
        auto out = build_pressing(c, 60);
        const auto& k = out.components.at(1);
        REQUIRE(k.switched);
        CHECK(*k.switched >= 6);
        for (Stage H : {Stage{5}, Stage{6}}) {
            auto early = build_pressing(c, H);
            CHECK_FALSE(early.components.at(1).switched);
        }
        PressConfig none = c;
        none.W.entries.clear();
        CHECK_FALSE(build_pressing(none, 60).components.at(1).switched);

        auto o = build_pressing(c, 8);
        auto ck = check_pressing(o);
        CHECK(ck.switches >= 1);
        CHECK(ck.mirror_diffs == 2 * ck.switches);
    }

    TEST_CASE("pressed construction invariants at H = 1000") {
        PressConfig c;
        c.W.entries = {{0, 6}, {2, 40}, {5, 300}};
        c.catalog = {{{0, 0, 0, 0}, {0, 30, 70, 400}}};
        c.opponents = {copier(1), copier(3, true), extra(PressOpponentKind::faker, 2, 7, 20),
                       extra(PressOpponentKind::pender, 1, 9, 15), copier(2)};
        auto out = build_pressing(c, 1000);
        auto ck = check_pressing(out);
        for (const auto& p : ck.problems) INFO(p);
        CHECK(ck.pass());
        CHECK(ck.switches > 10);
        CHECK(ck.mirror_diffs == 2 * ck.switches);
        CHECK(check_punctuality(out.logB).pass);
        CHECK(check_punctuality(out.logB2).pass);
        for (std::size_t n = 0; n < c.opponents.size(); ++n)
            check_opponent_punctual(out.opponent_logs[n], c.opponents[n].delay);
        CHECK(out.open_by_stage.size() == 1000);
        std::set<Nat> sizes;
        for (const auto& a : out.allocations) CHECK(sizes.insert(a.size).second);
        for (auto [m, s] : out.retired) CHECK(sizes.count(m) == 0);
        CHECK(out.logB.domain_size() == out.logB2.domain_size());
    }

    TEST_CASE("decode_g matches g") {
        PressConfig c;
        c.W.entries = {{0, 6}, {2, 40}};
        c.catalog = {{{0, 0, 0, 0, 0}, {0, 12, 3, 50, 0}}};
        c.opponents = {copier(1), copier(2, true)};
        auto out = build_pressing(c, 600);
        GTable g{c.W, c.catalog};
        CHECK(g(pair(0, 0)) == 6);
        CHECK(g(pair(0, 1)) == -1);
        CHECK(g(pair(1, 1)) == 12);
        CHECK(g(pair(2, 0)) == 0);
        auto table = canonical_press_iso(out);
        auto f = canonical_map(table);
        for (Nat z = 0; z < 8; ++z) CHECK(decode_g(out, f, f, z, g) == g(z));
        auto id = [](Elem v) { return v; };
        CHECK_THROWS_AS(decode_g(out, id, id, 0, g), Error);
    }

    TEST_CASE("catalog converging instantly gives 0") {
        PressConfig c;
        c.catalog = {{{0, 0, 0, 0}, {0, 0, 0, 0}}};
        c.opponents = {copier(1)};
        auto out = build_pressing(c, 400);
        GTable g{c.W, c.catalog};
        auto table = canonical_press_iso(out);
        auto f = canonical_map(table);
        for (Nat x = 0; x < 3; ++x) CHECK(decode_g(out, f, f, pair(1, x), g) == 0);
    }

    TEST_CASE("brute force isomorphisms agree with the canonical one") {
        PressConfig c;
        c.W.entries = {{0, 6}};
        c.opponents = {copier(1)};
        auto out = build_pressing(c, 30);
        auto canon = canonical_press_iso(out);
        const auto tb = truncate_all(out.logB), tb2 = truncate_all(out.logB2);
        auto isos = brute_force_isos(tb, tb2, 8);
        REQUIRE_FALSE(isos.empty());
        const auto closed = closed_part(tb);
        bool found = false;
        for (const auto& iso : isos) {
            bool same = true;
            for (Elem v = 0; v < tb.size; ++v)
                if (closed[v]) same &= iso[v] == canon[v];
            found |= same;
            // every isomorphism decodes g on the switched components it covers
            GTable g{c.W, c.catalog};
            auto f = [&](Elem v) { return iso.at(v); };
            CHECK(decode_g(out, f, f, 0, g) == 6);
        }
        CHECK(found);
        auto self = brute_force_isos(tb, tb, 8);
        REQUIRE_FALSE(self.empty());
        for (Elem v = 0; v < tb.size; ++v)
            if (closed[v]) CHECK(self[0][v] == v);
    }

    TEST_CASE("recover_iso between copiers") {
        PressConfig c;
        c.W.entries = {{0, 6}};
        c.opponents = {copier(1), copier(3, true), extra(PressOpponentKind::pender, 1, 0, 0)};
        auto out = build_pressing(c, 300);
        const auto t0 = truncate_all(out.opponent_logs[0]), t1 = truncate_all(out.opponent_logs[1]);
        for (std::size_t e : {std::size_t{2}, std::size_t{4}}) {
            auto iso = recover_iso(out, 0, 1, e);
            const auto& k = out.components[e];
            CHECK(iso.pairs.size() == 2 * k.count + k.tail_count);
            CHECK(is_hom_bijection(t0, t1, iso.pairs));
            CHECK(iso.settled > *k.tail_close);
            auto self = recover_iso(out, 0, 0, e);
            for (auto [u, v] : self.pairs) CHECK(u == v);
        }
        CHECK_THROWS_AS(recover_iso(out, 0, 2, 2), Error);
        CHECK_THROWS_AS(recover_iso(out, 0, 1, 5), Error);
    }

    TEST_CASE("config, trace and table") {
        auto c = press_config_from_json(nlohmann::json::parse(
            R"({"W":[[0,6]],"catalog":[{"values":[0,0],"conv":[0,4]}],"opponents":[{"kind":"copier","delay":2,"mirror":true},{"kind":"faker","size":3,"at":2}]})"));
        CHECK(c.opponents.size() == 2);
        CHECK(c.opponents[0].mirror);
        CHECK(c.opponents[1].kind == PressOpponentKind::faker);
        CHECK_THROWS_AS(press_config_from_json(nlohmann::json::parse(R"({"opponents":[{"kind":"nope"}]})")),
                        ConfigError);
        CHECK_THROWS_AS(press_config_from_json(nlohmann::json::parse(R"({"opponents":[{"kind":"faker"}]})")),
                        ConfigError);
        auto out = build_pressing(c, 50);
        auto s = trace_jsonl(out.trace);
        CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(out.trace.size()));
        auto first = nlohmann::json::parse(s.substr(0, s.find('\n')));
        CHECK(first.at("event") == "start");
        CHECK(first.at("size") == 1);
        auto t = component_table(out);
        CHECK(t.size() == out.components.size());
        CHECK(t[0].at("x") == 1);
        CHECK(trace_jsonl(build_pressing(c, 50).trace) == s);
    }
}
