#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <set>

#include "punctlab/permitting.hpp"

using namespace punctlab;

namespace {

struct Lcg {
    std::uint64_t state;
    std::uint64_t next(std::uint64_t bound) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return (state >> 33) % bound;
    }
};

PermitConfig catalog_config(CeSchedule W) {
    PermitConfig c;
    c.W = std::move(W);
    c.catalog = {{"identity", "identity", "succ", "succ"},
                 {"gate", "gate", "pairs", "pairs"},
                 {"gate-xor1", "gate-xor1", "pairs", "pairs"},
                 {"zero", "zero", "loops", "loops"}};
    return c;
}

CeSchedule random_w(Lcg& rng) {
    std::size_t k = 1 + rng.next(8);
    std::vector<Nat> xs(12);
    for (Nat x = 0; x < 12; ++x) xs[x] = x;
    for (std::size_t i = 11; i > 0; --i) std::swap(xs[i], xs[rng.next(i + 1)]);
    std::set<Stage> stages;
    while (stages.size() < k) stages.insert(1 + static_cast<Stage>(rng.next(200)));
    CeSchedule w;
    std::size_t i = 0;
    for (Stage s : stages) w.entries.emplace_back(xs[i++], s);
    return w;
}

// Naive reading of gate on pairs with f* = 0^p 1^omega.
std::optional<Nat> naive_gate_error(Nat p, Nat budget) {
    auto gate = [p](Nat x) { return x < p ? x : Nat{0}; };
    std::set<Nat> seen;
    for (Nat x = 0; x < budget; ++x) {
        Nat u = gate(x);
        if (seen.count(u)) return x;
        if (gate(u) != x) return x;
        if (gate(x ^ 1) != (u ^ 1)) return x;
        seen.insert(u);
    }
    return std::nullopt;
}

std::optional<Nat> first_failure_final(const PermitOutput& out, const Requirement& r, Nat upto) {
    Oracle orc = [&](Nat y) -> TupleValue { return {out.fval(y)}; };
    std::map<Nat, Nat> a, b;
    for (Nat x = 0; x <= upto; ++x)
        if (check_input(r, orc, x, a, b)) return x;
    return std::nullopt;
}

}  // namespace

TEST_SUITE("permitting") {
    TEST_CASE("find_error examples") {
        PermitConfig c;
        c.catalog = {{"identity", "identity", "succ", "succ"}, {"zero", "identity", "loops", "loops"}};
        PermitState st(c, 64);
        CHECK_FALSE(find_error(st, 0, 1000));
        st.f.assign(40, 1);
        CHECK_FALSE(find_error(st, 0, 1000));
        auto w = find_error(st, 1, 10);
        REQUIRE(w);
        CHECK(w->kind == ErrorKind::injectivity);
        CHECK(w->input == 1);
    }

    TEST_CASE("gate errors exactly where f* turns to 1") {
        PermitConfig c;
        c.catalog = {{"gate", "gate", "pairs", "pairs"}};
        for (Nat p = 0; p < 30; ++p) {
            PermitState st(c, 64);
            st.m[0] = p;
            auto w = find_error(st, 0, 100);
            auto naive = naive_gate_error(p, 100);
            REQUIRE(w);
            REQUIRE(naive);
            CHECK(w->input == *naive);
            CHECK(w->use >= p);
            CHECK(w->input + 1 >= p);
            // the all-0 oracle never fails
            st.m[0] = 1000;
            CHECK_FALSE(find_error(st, 0, 100));
        }
    }

    TEST_CASE("empty W: f stays 0 and markers stay put") {
        auto out = build_low(catalog_config({}), 120);
        CHECK(out.f_changes.empty());
        for (std::size_t x = 0; x < 50; ++x) CHECK(out.m[x] == x);
        for (const auto& ev : out.trace) CHECK(ev.kind != PermitEvent::Kind::act);
        CHECK(verify_equiv(out, {}, 12, 200).pass());
    }

    TEST_CASE("0 entering at stage 5 lets R_0 act") {
        PermitConfig c;
        c.W.entries = {{0, 5}};
        c.catalog = {{"gate", "gate", "pairs", "pairs"}};
        auto out = build_low(c, 30);
        REQUIRE(out.errors[0].count(0));
        const auto& w = out.errors[0].at(0);
        CHECK(w.stage < 5);
        CHECK(w.kind == ErrorKind::homomorphism);
        CHECK(out.g[0].at(0) == 0);
        PermitState st(c, 64);
        auto fresh = find_error(st, 0, 10);
        REQUIRE(fresh);
        CHECK(fresh->input == w.input);
        CHECK(fresh->use == w.use);
        int acts = 0;
        for (const auto& ev : out.trace)
            if (ev.kind == PermitEvent::Kind::act) {
                CHECK(ev.stage == 5);
                CHECK(ev.e == 0);
                ++acts;
            }
        CHECK(acts == 1);
        CHECK(out.satisfied[0]);
        CHECK(out.m[0] == 0);
        CHECK(out.fval(out.m[0]) == 1);
        for (Nat y = 0; y < 5; ++y) CHECK(out.fval(y) == 1);
        for (std::size_t x = 1; x < 10; ++x) CHECK(out.m[x] >= 5);
        CHECK(first_failure_final(out, c.catalog[0], w.input).has_value());
    }

    TEST_CASE("W = {0@5, 3@9}") {
        PermitConfig c = catalog_config({});
        c.W.entries = {{0, 5}, {3, 9}};
        auto out = build_low(c, 40);
        CHECK(out.fval(out.m[0]) == 1);
        CHECK(out.fval(out.m[1]) == 0);
        CHECK(out.fval(out.m[2]) == 0);
        CHECK(out.fval(out.m[3]) == 1);
        auto r = verify_equiv(out, c.W, 12, 200);
        CHECK(r.pass());
        CHECK(r.w_recovered[0] == 1);
        CHECK(r.w_recovered[3] == 1);
        CHECK(r.conclusive);
        CHECK_FALSE(verify_equiv(build_low(c, 9), c.W, 4, 20).conclusive);
    }

    TEST_CASE("random W schedules") {
        Lcg rng{4242};
        for (int rep = 0; rep < 10; ++rep) {
            auto c = catalog_config(random_w(rng));
            const Stage H = 320;
            auto out = build_low(c, H);
            const std::size_t E = c.catalog.size();

            for (Nat x = 0; x < 12; ++x) CHECK((out.fval(out.m[x]) == 1) == c.W.entry_stage(x).has_value());
            auto r = verify_equiv(out, c.W, 12, out.f.size() + 40);
            CHECK(r.pass());

            // permitting
            for (const auto& ch : out.f_changes) {
                bool permitted = false;
                for (Nat z : c.W.entering_at(ch.stage)) permitted |= z <= ch.y;
                CHECK(permitted);
            }

            // marker tracking
            for (std::size_t x = 0; x < 12; ++x) {
                Stage settle = 0;
                for (const auto& [z, t] : c.W.entries)
                    if (z < x) settle = std::max(settle, t);
                for (Stage s = settle; s < H; s += 7) CHECK(out.marker_after(x, s) == out.m[x]);
            }

            // pointer monotonicity, with errors of the higher requirement in every gap
            for (const auto& ps : out.pointers_by_stage)
                for (std::size_t e = 0; e + 1 < E; ++e) CHECK(ps[e] < ps[e + 1]);
            const auto& last = out.pointers_by_stage.back();
            for (std::size_t e = 0; e + 1 < E; ++e)
                for (std::size_t k = last[e] + 1; k < last[e + 1]; ++k) CHECK(out.errors[e + 1].count(k) == 1);

            // initialisation is caused by a lower requirement's error or act at the same stage
            // and an acted requirement leaves Step 2 until it is initialised or injured
            std::set<std::size_t> resting;
            for (std::size_t k = 0; k < out.trace.size(); ++k) {
                const auto& ev = out.trace[k];
                if (ev.kind == PermitEvent::Kind::init) {
                    std::size_t by = std::stoul(ev.tag);
                    CHECK(by < ev.e);
                    bool cause = false;
                    for (std::size_t q = 0; q < k; ++q) {
                        const auto& pr = out.trace[q];
                        cause |= pr.stage == ev.stage && pr.e == by &&
                                 (pr.kind == PermitEvent::Kind::error || pr.kind == PermitEvent::Kind::act);
                    }
                    CHECK(cause);
                    resting.erase(ev.e);
                }
                if (ev.kind == PermitEvent::Kind::injure) resting.erase(ev.e);
                if (ev.kind == PermitEvent::Kind::act) resting.insert(ev.e);
                if (ev.kind == PermitEvent::Kind::error) CHECK(resting.count(ev.e) == 0);
            }

            // a preserved failure survives into the final f
            for (std::size_t e = 0; e < E; ++e)
                if (out.satisfied[e] && out.acted_on[e])
                    CHECK(first_failure_final(out, c.catalog[e], out.acted_on[e]->input).has_value());
        }
    }

    TEST_CASE("a requirement without errors is never satisfied by acting") {
        PermitConfig c;
        c.W.entries = {{0, 3}, {6, 20}};
        c.catalog = {{"identity", "identity", "triples", "triples"}, {"gate", "gate", "pairs", "pairs"}};
        auto out = build_low(c, 60);
        CHECK(out.errors[0].empty());
        CHECK_FALSE(out.satisfied[0]);
        CHECK(out.satisfied[1]);
        CHECK(verify_equiv(out, c.W, 6, 100).pass());
    }

    TEST_CASE("config, trace and report") {
        auto c = permit_config_from_json(nlohmann::json::parse(
            R"({"W":[[0,5],[3,9]],"requirements":[{"psi_i":"gate","psi_j":"gate","a_m":"pairs","a_n":"pairs"}]})"));
        CHECK(c.W.entries.size() == 2);
        CHECK_THROWS_AS(permit_config_from_json(nlohmann::json::parse(
                            R"({"requirements":[{"psi_i":"gate","psi_j":"gate","a_m":"nope","a_n":"pairs"}]})")),
                        ConfigError);
        CHECK_THROWS_AS(permit_config_from_json(nlohmann::json::parse(R"({"W":[[0,5],[1,5]],"requirements":[]})")),
                        ConfigError);
        auto out = build_low(c, 20);
        auto s = trace_jsonl(out.trace);
        CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(out.trace.size()));
        auto first = nlohmann::json::parse(s.substr(0, s.find('\n')));
        CHECK(first.at("event") == "error");
        auto rep = permit_report(out, 4);
        CHECK(rep.at("requirements").size() == 1);
        CHECK(rep.at("requirements")[0].at("satisfied") == true);
        CHECK(rep.at("markers").size() == 4);
    }
}
