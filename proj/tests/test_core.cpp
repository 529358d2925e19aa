#include <doctest.h>

#include <sstream>

#include "punctlab/core.hpp"
#include "punctlab/injection.hpp"

using namespace punctlab;

namespace {

// One element per stage; stage s assigns f(s-1)=s, with an optional late assignment.
class Counter : public StageMachine {
public:
    Counter(Stage horizon) : StageMachine(Signature({"f"}), horizon) {}

protected:
    void step(Stage s, LogBuilder& out) override {
        Elem e = out.fresh();
        if (s > 0) out.assign(e - 1, e);
    }
};

StructureLog hand_log(Stage late_stage) {
    // element 5 born at stage 3; f(5) assigned at late_stage
    StructureLog log;
    log.signature = Signature({"f"});
    Elem next = 0;
    for (Stage s = 0; s <= std::max<Stage>(late_stage, 4); ++s) {
        EnumEvent ev;
        ev.stage = s;
        ev.first_new = next;
        ev.new_count = s == 3 ? 3 : 1;  // stage 3 enumerates 3,4,5
        next += ev.new_count;
        for (Elem e = ev.first_new; e < next; ++e)
            if (e != 5) ev.assign.push_back({0, e, e});
        if (s == late_stage) ev.assign.push_back({0, 5, 5});
        log.events.push_back(ev);
    }
    return log;
}

}  // namespace

TEST_SUITE("core") {
    TEST_CASE("signature validation") {
        CHECK_THROWS_AS(Signature(std::vector<std::string>{}), ConfigError);
        CHECK_THROWS_AS(Signature({"f", "f"}), ConfigError);
        Signature s({"S", "P", "R", "C"});
        CHECK(s.index_of("R") == 2);
    }

    TEST_CASE("advance: first stage and determinism") {
        Counter m(10);
        const auto& ev = m.advance();
        CHECK(ev.stage == 0);
        CHECK(ev.new_elements() == std::vector<Elem>{0});
        CHECK(ev.assign.empty());
        run_to_horizon(m);
        CHECK_THROWS_AS(m.advance(), Error);
        Counter m2(10);
        run_to_horizon(m2);
        CHECK(m.log() == m2.log());
    }

    TEST_CASE("punctualize stage 3 event size with N0=2, N1=1") {
        InjSpec spec;
        spec.N0 = 2;
        spec.N1 = 1;
        auto out = punctualize(spec, 6);
        CHECK(out.log.events[3].new_count == 3);
    }

    TEST_CASE("check_punctuality examples") {
        CHECK(check_punctuality(hand_log(4)).pass);
        auto rep = check_punctuality(hand_log(6));
        REQUIRE_FALSE(rep.pass);
        REQUIRE(rep.violations.size() == 1);
        CHECK(rep.violations[0].element == 5);
        CHECK(rep.violations[0].due == 4);
        CHECK(rep.violations[0].kind == Violation::Kind::late);
        StructureLog empty;
        empty.signature = Signature({"f"});
        CHECK(check_punctuality(empty).pass);
    }

    TEST_CASE("check_punctuality flags empty stages, duplicates and missing values") {
        Counter m(5);
        run_to_horizon(m);
        auto log = m.take();
        CHECK(check_punctuality(log).pass);
        auto dup = log;
        dup.events[3].assign.push_back({0, 1, 2});
        CHECK_FALSE(check_punctuality(dup).pass);
        auto missing = log;
        missing.events[2].assign.clear();
        auto rep = check_punctuality(missing);
        REQUIRE_FALSE(rep.pass);
        CHECK(rep.violations[0].kind == Violation::Kind::missing);
        CHECK(rep.violations[0].element == 1);
        auto gap = log;
        gap.events.push_back({5, log.domain_size(), 0, {}});
        CHECK_FALSE(check_punctuality(gap).pass);
    }

    TEST_CASE("fresh_index") {
        StructureLog empty;
        empty.signature = Signature({"f"});
        CHECK(fresh_index(empty) == 0);
        Counter m(10);
        run_to_horizon(m);
        CHECK(fresh_index(m.log()) == 10);
        // index-stage bound, checked by replaying
        auto born = birth_stages(m.log());
        for (Elem e = 0; e < born.size(); ++e) CHECK(e >= born[e]);
        Counter m7(7);
        run_to_horizon(m7);
        CHECK(fresh_index(m7.log()) >= 7);
    }

    TEST_CASE("index-stage bound holds for punctualize logs") {
        InjSpec spec;
        spec.N0 = kInfinite;
        spec.N1 = 3;
        spec.finite = {{2, 1}, {5, 4}, {1, 9}};
        auto out = punctualize(spec, 40);
        auto born = birth_stages(out.log);
        for (Elem e = 0; e < born.size(); ++e) REQUIRE(e >= born[e]);
        // domain is an initial segment after every stage
        Elem next = 0;
        for (const auto& ev : out.log.events) {
            CHECK(ev.first_new == next);
            next += ev.new_count;
        }
    }

    TEST_CASE("jsonl round trip and field order") {
        InjSpec spec;
        spec.N0 = 1;
        spec.N1 = 1;
        spec.finite = {{3, 2}};
        auto out = punctualize(spec, 8);
        std::ostringstream os;
        write_jsonl(out.log, os);
        auto text = os.str();
        CHECK(text.rfind("{\"stage\":0,\"new\":[0,1],\"assign\":[]}", 0) == 0);
        std::istringstream is(text);
        auto back = read_jsonl(is, out.log.signature);
        CHECK(back == out.log);
    }

    TEST_CASE("truncation prefix consistency") {
        Counter m(6);
        run_to_horizon(m);
        auto t = truncate(m.log(), 3);
        CHECK(t.size == 3);
        CHECK(t.map()[0] == 1);
        CHECK(t.map()[1] == 2);
        CHECK(t.map()[2] == kNone);
    }
}
