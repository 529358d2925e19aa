#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "punctlab/core.hpp"

namespace punctlab {

using Nat = std::uint64_t;
using TupleValue = std::vector<Nat>;

// Cantor pairing; throws on overflow.
Nat pair(Nat x, Nat y);
std::pair<Nat, Nat> unpair(Nat z);

// [] <-> 0; [a_0..a_{n-1}] <-> 1 + <n-1, <a_0, <a_1, ... a_{n-1}>>>.
Nat encode_tuple(const TupleValue& t);
TupleValue decode_tuple(Nat n);

// Total function with a convergence stage per argument. Arguments past the scripted
// range read as value 0 converging at stage 0.
struct ClockedFn {
    std::vector<Nat> values;
    std::vector<Stage> conv;

    Nat value(Nat x) const { return x < values.size() ? values[x] : 0; }
    Stage convergence(Nat x) const { return x < conv.size() ? conv[x] : 0; }
    void validate() const;
};

std::optional<Nat> eval_clocked(const ClockedFn& f, Nat x, Stage stage);

// One scripted value sequence: `init`, then a new value at each listed stage.
struct Schedule {
    Nat init = 0;
    std::vector<std::pair<Stage, Nat>> changes;  // strictly increasing stages > 0, each value new

    Nat at(Stage s) const;
    Nat limit() const { return changes.empty() ? init : changes.back().second; }
    std::vector<Stage> mind_changes() const;
    void validate(const std::string& what) const;
};

// g*(x,s); arguments past the scripted range are constantly 0.
struct Approx2 {
    std::vector<Schedule> rows;

    Nat eval(Nat x, Stage s) const { return x < rows.size() ? rows[x].at(s) : 0; }
    Nat limit(Nat x) const { return x < rows.size() ? rows[x].limit() : 0; }
    std::vector<Stage> mind_changes(Nat x) const;
    Stage last_change(Nat x) const;
    void validate() const;
};

// g*(x,s,t) for one scripted x. Columns s without a script are constant: the limit when
// s >= s_x, limit+1 below.
struct Approx3Row {
    Nat limit = 0;
    Stage s_x = 0;
    std::vector<std::pair<Stage, Schedule>> columns;  // sorted by s

    const Schedule* column(Stage s) const;
    Nat eval(Stage s, Stage t) const;
    Nat inner_limit(Stage s) const;
};

// Rows past the scripted range follow the canonical extension: limit 0, s_x advancing by
// one per argument, value 1 below s_x and 0 from s_x on.
struct Approx3 {
    std::vector<Approx3Row> rows;

    Nat eval(Nat x, Stage s, Stage t) const;
    Nat limit(Nat x) const;
    Nat inner_limit(Nat x, Stage s) const;
    Stage s_x(Nat x) const;
    std::vector<Stage> inner_mind_changes(Nat x, Stage s) const;
    // Throws ConfigError unless s_x >= x, s_x is least and strictly increasing in x.
    void validate() const;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

class OutOfOracle : public Error {
public:
    using Error::Error;
};

using Oracle = std::function<TupleValue(Nat)>;

Oracle nat_oracle(std::function<Nat(Nat)> f);

class SchemeCtx {
public:
    SchemeCtx(const Oracle& oracle, Nat budget) : oracle_(oracle), budget_(budget) {}

    void tick(Nat k = 1);
    // First entry of the oracle value (0 for the empty tuple).
    Nat query(Nat x);
    TupleValue query_tuple(Nat x);
    Nat steps() const { return steps_; }
    Nat max_query() const { return max_query_; }

private:
    const Oracle& oracle_;
    Nat budget_;
    Nat steps_ = 0;
    Nat max_query_ = 0;
};

struct OracleScheme {
    std::string name;
    std::function<Nat(Nat)> budget;
    std::function<Nat(SchemeCtx&, Nat)> program;
};

Nat run_scheme(const OracleScheme& s, const Oracle& oracle, Nat x);

const OracleScheme& scheme_by_name(const std::string& name);
std::vector<std::string> scheme_names();

// c.e. set given by its enumeration schedule.
struct CeSchedule {
    std::vector<std::pair<Nat, Stage>> entries;  // (element, stage)

    void validate() const;
    bool contains_by(Nat x, Stage s) const;  // entered at a stage <= s
    std::optional<Stage> entry_stage(Nat x) const;
    Stage last_stage() const { return entries.empty() ? 0 : entries.back().second; }
    // Elements entering exactly at stage s.
    std::vector<Nat> entering_at(Stage s) const;
};

ClockedFn clocked_from_json(const nlohmann::json& j);
Schedule schedule_from_json(const nlohmann::json& j);
Approx2 approx2_from_json(const nlohmann::json& j);
Approx3 approx3_from_json(const nlohmann::json& j);
CeSchedule ce_from_json(const nlohmann::json& j);

}  // namespace punctlab
