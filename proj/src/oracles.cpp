#include "punctlab/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace punctlab {

namespace {

Nat checked_add(Nat a, Nat b) {
    if (a > std::numeric_limits<Nat>::max() - b) throw Error("natural overflow");
    return a + b;
}

Nat checked_mul(Nat a, Nat b) {
    if (a != 0 && b > std::numeric_limits<Nat>::max() / a) throw Error("natural overflow");
    return a * b;
}

// Largest w with w(w+1)/2 <= z.
Nat tri_root(Nat z) {
    Nat w = static_cast<Nat>((std::sqrt(8.0L * static_cast<long double>(z) + 1.0L) - 1.0L) / 2.0L);
    auto tri = [](Nat v) -> unsigned __int128 { return static_cast<unsigned __int128>(v) * (v + 1) / 2; };
    while (tri(w) > z) --w;
    while (tri(w + 1) <= z) ++w;
    return w;
}

}  // namespace

Nat pair(Nat x, Nat y) {
    Nat s = checked_add(x, y);
    Nat t = s % 2 == 0 ? checked_mul(s / 2, checked_add(s, 1)) : checked_mul(s, checked_add(s, 1) / 2);
    return checked_add(t, y);
}

std::pair<Nat, Nat> unpair(Nat z) {
    Nat w = tri_root(z);
    Nat t = w % 2 == 0 ? (w / 2) * (w + 1) : w * ((w + 1) / 2);
    Nat y = z - t;
    return {w - y, y};
}

Nat encode_tuple(const TupleValue& t) {
    if (t.empty()) return 0;
    Nat packed = t.back();
    for (std::size_t i = t.size() - 1; i-- > 0;) packed = pair(t[i], packed);
    return checked_add(1, pair(t.size() - 1, packed));
}

TupleValue decode_tuple(Nat n) {
    if (n == 0) return {};
    auto [len1, packed] = unpair(n - 1);
    TupleValue out;
    for (Nat i = 0; i < len1; ++i) {
        auto [a, rest] = unpair(packed);
        out.push_back(a);
        packed = rest;
    }
    out.push_back(packed);
    return out;
}

void ClockedFn::validate() const {
    if (values.size() != conv.size()) throw ConfigError("clocked function needs equally many values and conv stages");
}

std::optional<Nat> eval_clocked(const ClockedFn& f, Nat x, Stage stage) {
    if (stage < f.convergence(x)) return std::nullopt;
    return f.value(x);
}

Nat Schedule::at(Stage s) const {
    Nat v = init;
    for (const auto& [st, val] : changes) {
        if (st > s) break;
        v = val;
    }
    return v;
}

std::vector<Stage> Schedule::mind_changes() const {
    std::vector<Stage> out;
    for (const auto& c : changes) out.push_back(c.first);
    return out;
}

void Schedule::validate(const std::string& what) const {
    Nat prev = init;
    Stage last = 0;
    for (const auto& [st, val] : changes) {
        if (st <= last) throw ConfigError(what + ": change stages must be positive and strictly increasing");
        if (val == prev) throw ConfigError(what + ": a scheduled change must change the value");
        last = st;
        prev = val;
    }
}

std::vector<Stage> Approx2::mind_changes(Nat x) const {
    return x < rows.size() ? rows[x].mind_changes() : std::vector<Stage>{};
}

Stage Approx2::last_change(Nat x) const {
    auto mc = mind_changes(x);
    return mc.empty() ? 0 : mc.back();
}

void Approx2::validate() const {
    for (std::size_t x = 0; x < rows.size(); ++x) rows[x].validate("approx2 row " + std::to_string(x));
}

const Schedule* Approx3Row::column(Stage s) const {
    auto it = std::lower_bound(columns.begin(), columns.end(), s,
                               [](const auto& c, Stage v) { return c.first < v; });
    if (it != columns.end() && it->first == s) return &it->second;
    return nullptr;
}

Nat Approx3Row::eval(Stage s, Stage t) const {
    if (const auto* c = column(s)) return c->at(t);
    return s >= s_x ? limit : limit + 1;
}

Nat Approx3Row::inner_limit(Stage s) const {
    if (const auto* c = column(s)) return c->limit();
    return s >= s_x ? limit : limit + 1;
}

Stage Approx3::s_x(Nat x) const {
    if (x < rows.size()) return rows[x].s_x;
    Nat base = rows.empty() ? 0 : rows.back().s_x + 1;
    return static_cast<Stage>(base + (x - rows.size()));
}

Nat Approx3::eval(Nat x, Stage s, Stage t) const {
    if (x < rows.size()) return rows[x].eval(s, t);
    return s >= s_x(x) ? 0 : 1;
}

Nat Approx3::limit(Nat x) const {
    return x < rows.size() ? rows[x].limit : 0;
}

Nat Approx3::inner_limit(Nat x, Stage s) const {
    if (x < rows.size()) return rows[x].inner_limit(s);
    return s >= s_x(x) ? 0 : 1;
}

std::vector<Stage> Approx3::inner_mind_changes(Nat x, Stage s) const {
    if (x < rows.size())
        if (const auto* c = rows[x].column(s)) return c->mind_changes();
    return {};
}

void Approx3::validate() const {
    for (std::size_t x = 0; x < rows.size(); ++x) {
        const auto& r = rows[x];
        const std::string what = "approx3 row " + std::to_string(x);
        if (r.s_x < x) throw ConfigError(what + ": s_x must be >= x");
        if (x > 0 && r.s_x <= rows[x - 1].s_x) throw ConfigError(what + ": s_x must be strictly increasing");
        for (std::size_t k = 0; k < r.columns.size(); ++k) {
            if (k > 0 && r.columns[k].first <= r.columns[k - 1].first)
                throw ConfigError(what + ": columns must be strictly increasing in s");
            r.columns[k].second.validate(what + " column " + std::to_string(r.columns[k].first));
            if (r.columns[k].first >= r.s_x && r.columns[k].second.limit() != r.limit)
                throw ConfigError(what + ": inner limit differs from the limit at s >= s_x");
        }
        if (r.s_x > x && r.inner_limit(r.s_x - 1) == r.limit)
            throw ConfigError(what + ": s_x is not the least s >= x with stable inner limits");
    }
}

Oracle nat_oracle(std::function<Nat(Nat)> f) {
    return [f = std::move(f)](Nat x) { return TupleValue{f(x)}; };
}

void SchemeCtx::tick(Nat k) {
    steps_ += k;
    if (steps_ > budget_)
        throw BudgetExceeded("step budget " + std::to_string(budget_) + " exceeded");
}

Nat SchemeCtx::query(Nat x) {
    auto t = query_tuple(x);
    return t.empty() ? 0 : t.front();
}

TupleValue SchemeCtx::query_tuple(Nat x) {
    tick();
    max_query_ = std::max(max_query_, x);
    return oracle_(x);
}

Nat run_scheme(const OracleScheme& s, const Oracle& oracle, Nat x) {
    SchemeCtx ctx(oracle, s.budget(x));
    return s.program(ctx, x);
}

namespace {

std::map<std::string, OracleScheme> build_catalog() {
    std::map<std::string, OracleScheme> c;
    auto add = [&](std::string name, std::function<Nat(Nat)> budget, std::function<Nat(SchemeCtx&, Nat)> prog) {
        c[name] = OracleScheme{name, std::move(budget), std::move(prog)};
    };
    auto lin = [](Nat k) { return [k](Nat n) { return k * (n + 1); }; };
    add("identity", lin(1), [](SchemeCtx& c, Nat x) { c.tick(); return x; });
    add("zero", lin(1), [](SchemeCtx& c, Nat) { c.tick(); return Nat{0}; });
    add("xor1", lin(1), [](SchemeCtx& c, Nat x) { c.tick(); return x ^ 1; });
    add("apply", lin(2), [](SchemeCtx& c, Nat x) { c.tick(); return c.query(x); });
    // A tight budget used to exercise the budget check.
    add("query-twice", [](Nat n) { return n; }, [](SchemeCtx& c, Nat x) {
        Nat a = c.query(x);
        return a + c.query(x);
    });
    add("oracle-mod2", lin(2), [](SchemeCtx& c, Nat x) { c.tick(); return c.query(x) % 2; });
    add("oracle-count", lin(2), [](SchemeCtx& c, Nat x) {
        c.tick();
        Nat k = 0;
        for (Nat v : c.query_tuple(x)) k += v != 0;
        return k;
    });
    // Correct only while the oracle reads 0.
    add("gate", lin(2), [](SchemeCtx& c, Nat x) { c.tick(); return c.query(x) == 0 ? x : Nat{0}; });
    add("gate-xor1", lin(2), [](SchemeCtx& c, Nat x) { c.tick(); return c.query(x) == 0 ? x ^ 1 : Nat{0}; });
    return c;
}

const std::map<std::string, OracleScheme>& catalog() {
    static const auto c = build_catalog();
    return c;
}

}  // namespace

const OracleScheme& scheme_by_name(const std::string& name) {
    auto it = catalog().find(name);
    if (it == catalog().end()) throw ConfigError("unknown scheme: " + name);
    return it->second;
}

std::vector<std::string> scheme_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : catalog()) out.push_back(k);
    return out;
}

void CeSchedule::validate() const {
    std::set<Nat> seen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!seen.insert(entries[i].first).second) throw ConfigError("W schedule repeats an element");
        if (i > 0 && entries[i].second <= entries[i - 1].second)
            throw ConfigError("W schedule stages must be strictly increasing");
    }
}

bool CeSchedule::contains_by(Nat x, Stage s) const {
    auto st = entry_stage(x);
    return st && *st <= s;
}

std::optional<Stage> CeSchedule::entry_stage(Nat x) const {
    for (const auto& [e, st] : entries)
        if (e == x) return st;
    return std::nullopt;
}

std::vector<Nat> CeSchedule::entering_at(Stage s) const {
    std::vector<Nat> out;
    for (const auto& [e, st] : entries)
        if (st == s) out.push_back(e);
    return out;
}

ClockedFn clocked_from_json(const nlohmann::json& j) {
    ClockedFn f;
    f.values = j.at("values").get<std::vector<Nat>>();
    f.conv = j.at("conv").get<std::vector<Stage>>();
    f.validate();
    return f;
}

Schedule schedule_from_json(const nlohmann::json& j) {
    Schedule s;
    if (j.is_number()) {
        s.init = j.get<Nat>();
        return s;
    }
    s.init = j.value("init", Nat{0});
    if (j.contains("changes"))
        for (const auto& c : j.at("changes")) s.changes.emplace_back(c.at(0).get<Stage>(), c.at(1).get<Nat>());
    return s;
}

Approx2 approx2_from_json(const nlohmann::json& j) {
    Approx2 a;
    for (const auto& row : j) a.rows.push_back(schedule_from_json(row));
    a.validate();
    return a;
}

Approx3 approx3_from_json(const nlohmann::json& j) {
    Approx3 a;
    for (const auto& row : j) {
        Approx3Row r;
        r.limit = row.at("limit").get<Nat>();
        r.s_x = row.at("s_x").get<Stage>();
        if (row.contains("columns"))
            for (const auto& c : row.at("columns")) r.columns.emplace_back(c.at("s").get<Stage>(), schedule_from_json(c));
        a.rows.push_back(std::move(r));
    }
    a.validate();
    return a;
}

CeSchedule ce_from_json(const nlohmann::json& j) {
    CeSchedule w;
    for (const auto& e : j) w.entries.emplace_back(e.at(0).get<Nat>(), e.at(1).get<Stage>());
    w.validate();
    return w;
}

}  // namespace punctlab
