#include "punctlab/permitting.hpp"

#include <algorithm>

namespace punctlab {

namespace {

std::map<std::string, UnaryStructure> build_structures() {
    std::map<std::string, UnaryStructure> c;
    c["succ"] = {"succ", [](Nat x) { return x + 1; }};
    c["pairs"] = {"pairs", [](Nat x) { return x ^ 1; }};
    c["loops"] = {"loops", [](Nat x) { return x; }};
    c["triples"] = {"triples", [](Nat x) { return 3 * (x / 3) + (x % 3 + 1) % 3; }};
    return c;
}

const std::map<std::string, UnaryStructure>& structures() {
    static const auto c = build_structures();
    return c;
}

const char* kind_name(PermitEvent::Kind k) {
    switch (k) {
        case PermitEvent::Kind::error: return "error";
        case PermitEvent::Kind::pointer: return "pointer";
        case PermitEvent::Kind::init: return "init";
        case PermitEvent::Kind::act: return "act";
        case PermitEvent::Kind::refresh: return "refresh";
        case PermitEvent::Kind::fset: return "fset";
        case PermitEvent::Kind::injure: return "injure";
    }
    return "?";
}

struct Cursor {
    Nat p = 0;
    Nat next = 0;
    std::map<Nat, Nat> img_i, img_j;
    std::optional<ErrorWitness> found;
};

class LowBuilder {
public:
    LowBuilder(const PermitConfig& cfg, Stage horizon)
        : st_(cfg, marker_count(cfg, horizon)), horizon_(horizon), cursors_(cfg.catalog.size()) {
        for (std::size_t e = 0; e < cursors_.size(); ++e) reset(e);
        out_.horizon = horizon;
    }

    PermitOutput run() {
        for (Stage s = 0; s < horizon_; ++s) {
            st_.stage = s;
            changed_.clear();
            step1(s);
            step2(s);
            step3(s);
            for (std::size_t e = 0; e < cursors_.size(); ++e) {
                bool stale = cursors_[e].p != st_.p(e);
                for (Nat y : changed_) stale |= y < st_.p(e);
                if (stale) reset(e);
            }
            out_.pointers_by_stage.push_back(st_.pointer);
        }
        out_.f = st_.f;
        out_.m = st_.m;
        out_.satisfied = st_.satisfied;
        out_.g = st_.g;
        out_.errors = st_.errors;
        out_.acted_on = st_.acted_on;
        return std::move(out_);
    }

private:
    static std::size_t marker_count(const PermitConfig& cfg, Stage horizon) {
        Nat top = 0;
        for (const auto& [x, s] : cfg.W.entries) top = std::max(top, x);
        return static_cast<std::size_t>(horizon) + cfg.catalog.size() + static_cast<std::size_t>(top) + 16;
    }

    void emit(PermitEvent::Kind k, std::size_t e, Nat x, Nat from, Nat to, std::string tag = {}) {
        out_.trace.push_back({k, st_.stage, e, x, from, to, std::move(tag)});
    }

    void reset(std::size_t e) {
        cursors_[e] = Cursor{};
        cursors_[e].p = st_.p(e);
    }

    // Every unsatisfied requirement gets `s` inputs of search.
    void step1(Stage s) {
        for (std::size_t e = 0; e < cursors_.size(); ++e) {
            if (st_.satisfied[e]) continue;
            Cursor& c = cursors_[e];
            for (Nat k = 0; k < s && !c.found; ++k) {
                Nat use = 0;
                auto orc = star_oracle(st_.f, c.p, &use);
                auto kind = check_input(st_.cfg.catalog[e], orc, c.next, c.img_i, c.img_j);
                if (!kind) {
                    ++c.next;
                    continue;
                }
                // the failure must be readable within f|s before it counts
                if (use >= s) break;
                c.found = ErrorWitness{e, st_.pointer[e], c.p, s, c.next, use, *kind};
            }
        }
    }

    void initialise_above(std::size_t e, std::size_t k) {
        for (std::size_t e2 = e + 1; e2 < cursors_.size(); ++e2) {
            std::size_t to = k + (e2 - e);
            if (to >= st_.m.size()) throw Error("marker budget exhausted");
            emit(PermitEvent::Kind::init, e2, to, st_.pointer[e2], to, std::to_string(e));
            st_.satisfied[e2] = false;
            st_.g[e2].clear();
            st_.errors[e2].clear();
            st_.acted_on[e2].reset();
            st_.pointer[e2] = to;
            reset(e2);
        }
    }

    void step2(Stage s) {
        for (std::size_t e = 0; e < cursors_.size(); ++e) {
            if (st_.satisfied[e] || !cursors_[e].found) continue;
            ErrorWitness w = *cursors_[e].found;
            const std::size_t x = st_.pointer[e];
            emit(PermitEvent::Kind::error, e, x, w.input, w.use, to_string(w.kind));
            st_.errors[e][x] = w;
            st_.g[e][x] = st_.cfg.W.contains_by(x, s) ? 1 : 0;
            if (x + 1 >= st_.m.size()) throw Error("marker budget exhausted");
            emit(PermitEvent::Kind::pointer, e, x + 1, x, x + 1);
            st_.pointer[e] = x + 1;
            reset(e);
            initialise_above(e, x + 1);
            return;
        }
    }

    bool valid(const ErrorWitness& w, std::size_t x, Stage s) const {
        if (w.stage >= s || st_.m[x] != w.p) return false;
        for (const auto& c : out_.f_changes)
            if (c.y < w.p && c.stage >= w.stage) return false;
        return true;
    }

    void setf(Nat y, const char* tag) {
        if (st_.fval(y) == 1) return;
        if (y >= st_.f.size()) st_.f.resize(y + 1, 0);
        st_.f[y] = 1;
        out_.f_changes.push_back({st_.stage, y, 0, 1});
        changed_.push_back(y);
        emit(PermitEvent::Kind::fset, 0, y, 0, 1, tag);
    }

    void step3(Stage s) {
        auto entering = st_.cfg.W.entering_at(s);
        if (entering.empty()) return;
        const Nat x0 = entering.front();
        if (x0 + 1 >= st_.m.size()) throw Error("marker budget exhausted");
        const std::size_t x = static_cast<std::size_t>(x0);
        std::optional<std::size_t> actor;
        for (std::size_t e = 0; e < cursors_.size() && !actor; ++e) {
            auto it = st_.errors[e].find(x);
            if (it != st_.errors[e].end() && valid(it->second, x, s)) actor = e;
        }
        if (actor) {
            const std::size_t e = *actor;
            emit(PermitEvent::Kind::act, e, x, st_.m[x], s);
            for (Nat y = st_.m[x]; y < s; ++y) setf(y, "act");
            st_.satisfied[e] = true;
            st_.acted_on[e] = st_.errors[e].at(x);
            initialise_above(e, st_.pointer[e]);
        }
        setf(st_.m[x], "enter");
        const Nat before = st_.m[x + 1];
        for (std::size_t k = x + 1; k < st_.m.size(); ++k) {
            Nat v = std::max<Nat>(s, st_.m[k - 1] + 1);
            while (st_.fval(v) == 1) ++v;
            st_.m[k] = v;
        }
        emit(PermitEvent::Kind::refresh, x + 1, x + 1, before, st_.m[x + 1]);
        for (const auto& [z, t] : st_.cfg.W.entries)
            if (z > x0 && t <= s) setf(st_.m[z], "marker");
        out_.marker_history.emplace_back(s, st_.m);
        // a satisfied requirement whose preserved failure read a changed position is injured
        for (std::size_t e = 0; e < cursors_.size(); ++e) {
            if (!st_.satisfied[e] || !st_.acted_on[e]) continue;
            const auto& w = *st_.acted_on[e];
            bool hit = false;
            for (Nat y : changed_) hit |= y < w.p && y <= w.use;
            if (!hit) continue;
            emit(PermitEvent::Kind::injure, e, w.marker, w.p, w.use);
            st_.satisfied[e] = false;
            st_.acted_on[e].reset();
        }
    }

    PermitState st_;
    Stage horizon_;
    std::vector<Cursor> cursors_;
    std::vector<Nat> changed_;
    PermitOutput out_;
};

}  // namespace

const UnaryStructure& structure_by_name(const std::string& name) {
    auto it = structures().find(name);
    if (it == structures().end()) throw ConfigError("unknown structure: " + name);
    return it->second;
}

std::vector<std::string> structure_names() {
    std::vector<std::string> v;
    for (const auto& [k, s] : structures()) v.push_back(k);
    return v;
}

PermitConfig permit_config_from_json(const nlohmann::json& j) {
    PermitConfig c;
    if (j.contains("W")) c.W = ce_from_json(j.at("W"));
    for (const auto& r : j.at("requirements")) {
        Requirement q{r.at("psi_i").get<std::string>(), r.at("psi_j").get<std::string>(),
                      r.at("a_m").get<std::string>(), r.at("a_n").get<std::string>()};
        scheme_by_name(q.psi_i);
        scheme_by_name(q.psi_j);
        structure_by_name(q.a_m);
        structure_by_name(q.a_n);
        c.catalog.push_back(q);
    }
    return c;
}

std::string to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::composition: return "composition";
        case ErrorKind::injectivity: return "injectivity";
        case ErrorKind::homomorphism: return "homomorphism";
        case ErrorKind::budget: return "budget";
    }
    return "?";
}

Oracle star_oracle(const std::vector<std::uint8_t>& f, Nat p, Nat* use) {
    return [&f, p, use](Nat y) -> TupleValue {
        if (use) *use = std::max(*use, y);
        if (y >= p) return {1};
        return {y < f.size() ? Nat{f[y]} : Nat{0}};
    };
}

std::optional<ErrorKind> check_input(const Requirement& r, const Oracle& oracle, Nat x, std::map<Nat, Nat>& img_i,
                                     std::map<Nat, Nat>& img_j) {
    const auto& pi = scheme_by_name(r.psi_i);
    const auto& pj = scheme_by_name(r.psi_j);
    const auto& am = structure_by_name(r.a_m);
    const auto& an = structure_by_name(r.a_n);
    try {
        const Nat u = run_scheme(pi, oracle, x);
        const Nat a = run_scheme(pj, oracle, x);
        auto hit = img_i.find(u);
        if (hit != img_i.end() && hit->second != x) return ErrorKind::injectivity;
        hit = img_j.find(a);
        if (hit != img_j.end() && hit->second != x) return ErrorKind::injectivity;
        if (run_scheme(pi, oracle, a) != x) return ErrorKind::composition;
        if (run_scheme(pi, oracle, am.f(x)) != an.f(u)) return ErrorKind::homomorphism;
        if (run_scheme(pj, oracle, an.f(x)) != am.f(a)) return ErrorKind::homomorphism;
        img_i.emplace(u, x);
        img_j.emplace(a, x);
    } catch (const BudgetExceeded&) {
        return ErrorKind::budget;
    }
    return std::nullopt;
}

PermitState::PermitState(PermitConfig c, std::size_t marker_count) : cfg(std::move(c)) {
    cfg.W.validate();
    const std::size_t E = cfg.catalog.size();
    if (marker_count <= E) throw ConfigError("too few markers for the catalog");
    for (std::size_t x = 0; x < marker_count; ++x) m.push_back(x);
    for (std::size_t e = 0; e < E; ++e) pointer.push_back(e);
    satisfied.assign(E, false);
    g.resize(E);
    errors.resize(E);
    acted_on.resize(E);
}

std::optional<ErrorWitness> find_error(const PermitState& st, std::size_t e, Nat budget) {
    std::map<Nat, Nat> img_i, img_j;
    for (Nat x = 0; x < budget; ++x) {
        Nat use = 0;
        auto orc = star_oracle(st.f, st.p(e), &use);
        if (auto kind = check_input(st.cfg.catalog.at(e), orc, x, img_i, img_j))
            return ErrorWitness{e, st.pointer[e], st.p(e), st.stage, x, use, *kind};
    }
    return std::nullopt;
}

Nat PermitOutput::marker_after(std::size_t x, Stage s) const {
    Nat v = x;
    for (const auto& [t, ms] : marker_history) {
        if (t > s) break;
        v = ms.at(x);
    }
    return v;
}

std::uint8_t PermitOutput::f_after(Nat y, Stage s) const {
    std::uint8_t v = 0;
    for (const auto& c : f_changes)
        if (c.y == y && c.stage <= s) v = c.to;
    return v;
}

PermitOutput build_low(const PermitConfig& cfg, Stage horizon) { return LowBuilder(cfg, horizon).run(); }

EquivReport verify_equiv(const PermitOutput& out, const CeSchedule& W, std::size_t xs, Nat ys) {
    EquivReport r;
    const Stage H = out.horizon;
    r.conclusive = H > 0 && W.last_stage() + 1 < H;
    std::vector<Nat> rm;
    for (std::size_t x = 0; x < xs; ++x) {
        std::optional<Stage> found;
        for (Stage s = 0; s < H && !found; ++s) {
            bool same = true;
            for (std::size_t z = 0; z < x && same; ++z) same = W.contains_by(z, s) == (out.fval(rm[z]) == 1);
            if (same) found = s;
        }
        if (!found) {
            r.w_mismatch.push_back(x);
            rm.push_back(out.m.at(x));
            r.w_recovered.push_back(0);
            continue;
        }
        rm.push_back(out.marker_after(x, *found));
        const std::uint8_t w = out.fval(rm[x]);
        r.w_recovered.push_back(w);
        if ((w == 1) != W.entry_stage(x).has_value()) r.w_mismatch.push_back(x);
        if (rm[x] != out.m.at(x)) r.m_mismatch.push_back(x);
    }
    for (Nat y = 0; y < ys; ++y) {
        Stage s = 0;
        for (const auto& [z, t] : W.entries)
            if (z <= y) s = std::max(s, t);
        if (out.f_after(y, s) != out.fval(y)) r.f_mismatch.push_back(y);
    }
    return r;
}

std::string event_json(const PermitEvent& ev) {
    nlohmann::ordered_json j;
    j["stage"] = ev.stage;
    j["event"] = kind_name(ev.kind);
    switch (ev.kind) {
        case PermitEvent::Kind::error:
            j["e"] = ev.e;
            j["marker"] = ev.x;
            j["input"] = ev.from;
            j["use"] = ev.to;
            j["kind"] = ev.tag;
            break;
        case PermitEvent::Kind::pointer:
        case PermitEvent::Kind::init:
            j["e"] = ev.e;
            j["from"] = ev.from;
            j["to"] = ev.to;
            if (ev.kind == PermitEvent::Kind::init) j["by"] = std::stoul(ev.tag);
            break;
        case PermitEvent::Kind::act:
            j["e"] = ev.e;
            j["marker"] = ev.x;
            j["from"] = ev.from;
            j["to"] = ev.to;
            break;
        case PermitEvent::Kind::refresh:
            j["marker"] = ev.x;
            j["from"] = ev.from;
            j["to"] = ev.to;
            break;
        case PermitEvent::Kind::fset:
            j["y"] = ev.x;
            j["cause"] = ev.tag;
            break;
        case PermitEvent::Kind::injure:
            j["e"] = ev.e;
            j["marker"] = ev.x;
            j["p"] = ev.from;
            j["use"] = ev.to;
            break;
    }
    return j.dump();
}

std::string trace_jsonl(const std::vector<PermitEvent>& trace) {
    std::string s;
    for (const auto& ev : trace) {
        s += event_json(ev);
        s += '\n';
    }
    return s;
}

nlohmann::ordered_json permit_report(const PermitOutput& out, std::size_t xs) {
    nlohmann::ordered_json j;
    j["horizon"] = out.horizon;
    nlohmann::ordered_json reqs = nlohmann::ordered_json::array();
    const auto& last = out.pointers_by_stage.empty() ? std::vector<std::size_t>{} : out.pointers_by_stage.back();
    for (std::size_t e = 0; e < out.satisfied.size(); ++e) {
        nlohmann::ordered_json r;
        r["e"] = e;
        r["satisfied"] = static_cast<bool>(out.satisfied[e]);
        if (e < last.size()) {
            r["pointer"] = last[e];
            r["p"] = out.m.at(last[e]);
        }
        r["errors"] = out.errors[e].size();
        nlohmann::ordered_json g = nlohmann::ordered_json::object();
        for (const auto& [x, v] : out.g[e]) g[std::to_string(x)] = v;
        r["g"] = g;
        if (out.acted_on[e]) {
            const auto& w = *out.acted_on[e];
            r["witness"] = {{"marker", w.marker}, {"p", w.p}, {"stage", w.stage}, {"input", w.input},
                            {"use", w.use}, {"kind", to_string(w.kind)}};
        }
        reqs.push_back(r);
    }
    j["requirements"] = reqs;
    nlohmann::ordered_json ms = nlohmann::ordered_json::array();
    for (std::size_t x = 0; x < xs && x < out.m.size(); ++x)
        ms.push_back({{"x", x}, {"m", out.m[x]}, {"f", out.fval(out.m[x])}});
    j["markers"] = ms;
    std::vector<Nat> ones;
    for (Nat y = 0; y < out.f.size(); ++y)
        if (out.f[y]) ones.push_back(y);
    j["f_ones"] = ones;
    return j;
}

}  // namespace punctlab
