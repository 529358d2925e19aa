#include "punctlab/pathological.hpp"

#include <algorithm>
#include <set>

namespace punctlab {

std::size_t Census::count(Nat size) const {
    auto it = ticks.find(size);
    return it == ticks.end() ? 0 : it->second.size();
}

std::optional<Stage> Census::tick_of(Nat size, std::size_t rank) const {
    auto it = ticks.find(size);
    if (rank == 0 || it == ticks.end() || it->second.size() < rank) return std::nullopt;
    return it->second[rank - 1];
}

void Opponent::emit(Nat size, Stage tick) {
    census_.add(size, tick);
    orbits_.push_back({size, 0, tick});
}

void Opponent::step(Stage tick, const std::vector<OrbitRecord>& a) {
    switch (spec_.kind) {
        case OpponentKind::faker:
            if (!faked_ && tick >= spec_.fake_at) {
                faked_ = true;
                emit(spec_.fake_size, tick);
            }
            [[fallthrough]];
        case OpponentKind::copier:
            while (copied_ < a.size() && a[copied_].tick + spec_.delay <= tick) emit(a[copied_++].size, tick);
            break;
        case OpponentKind::sparse: {
            const Nat m = copied_ + 1;
            if (copied_ < a.size() && tick >= m * m) emit(a[copied_++].size, tick);
            break;
        }
        case OpponentKind::silent:
            break;
    }
}

namespace {

OpponentKind kind_from_string(const std::string& s) {
    if (s == "copier") return OpponentKind::copier;
    if (s == "faker") return OpponentKind::faker;
    if (s == "sparse") return OpponentKind::sparse;
    if (s == "silent") return OpponentKind::silent;
    throw ConfigError("unknown opponent kind: " + s);
}

}  // namespace

PathConfig path_config_from_json(const nlohmann::json& j) {
    PathConfig c;
    c.schemes = j.at("schemes").get<std::vector<std::string>>();
    if (j.contains("opponents"))
        for (const auto& o : j.at("opponents")) {
            OpponentSpec sp;
            sp.kind = kind_from_string(o.at("kind").get<std::string>());
            sp.delay = o.value("delay", Stage{1});
            sp.fake_size = o.value("size", Nat{0});
            sp.fake_at = o.value("at", Stage{1});
            if (sp.kind == OpponentKind::faker && sp.fake_size == 0) throw ConfigError("faker needs a positive size");
            c.opponents.push_back(sp);
        }
    if (j.contains("g")) c.g = clocked_from_json(j.at("g"));
    c.wait_cap = j.value("wait_cap", c.wait_cap);
    return c;
}

PathState::PathState(PathConfig c) : cfg(std::move(c)) {
    for (const auto& name : cfg.schemes) schemes.push_back(&scheme_by_name(name));
    cfg.g.validate();
    const std::size_t L = schemes.size() + 1;
    if (cfg.opponents.size() > L) throw ConfigError("more opponents than requirement levels");
    for (std::size_t i = 0; i < L; ++i) {
        n.push_back(i + 1);
        s.push_back(static_cast<Stage>(i));
    }
    acted.resize(cfg.opponents.size());
    for (const auto& sp : cfg.opponents) opponents.emplace_back(sp);
}

Oracle PathState::oracle_below(Stage bound) const {
    return [this, bound](Nat y) -> TupleValue {
        if (y >= bound) throw OutOfOracle("query past the current oracle prefix");
        return y < d.size() ? d[y].v : TupleValue{};
    };
}

bool PathState::opponent_inside_a(std::size_t j) const {
    for (const auto& [size, t] : opponents[j].census().ticks)
        if (t.size() > a_census.count(size)) return false;
    return true;
}

std::optional<Nat> PathState::disagreement(std::size_t e, Stage stage) const {
    const Oracle o = oracle_below(stage);
    for (Nat x = 0; x < stage; ++x) {
        auto gx = eval_clocked(cfg.g, x, stage);
        if (!gx) continue;
        try {
            if (run_scheme(*schemes[e], o, x) != *gx) return x;
        } catch (const OutOfOracle&) {
        } catch (const BudgetExceeded&) {
            return x;
        }
    }
    return std::nullopt;
}

std::optional<AttentionKind> requires_attention(const PathState& st, std::size_t e, Stage stage) {
    if (e < st.opponents.size() && !st.acted[e])
        for (const auto& [size, t] : st.opponents[e].census().ticks)
            if (size >= st.n[e] && t.size() > st.a_census.count(size)) return AttentionKind{AttentionWhich::Q, e};
    if (e >= st.schemes.size() || st.s[e] > stage || !st.disagreement(e, stage))
        return AttentionKind{AttentionWhich::P, e};
    return std::nullopt;
}

namespace {

class PathBuilder {
public:
    PathBuilder(const PathConfig& cfg) : st_(cfg), log_(Signature({"f"})) {
        due_.assign(st_.schemes.size(), 1);
        stalled_.assign(st_.opponents.size(), kUnstalled);
    }

    PathOutput run(Stage horizon) {
        bool settled = false;
        for (stage_ = 0; stage_ < horizon; ++stage_) {
            log_.begin_stage(stage_);
            out_.stage_tick.push_back(st_.tick);
            changed_.clear();
            update_special();
            for (;;) {
                auto a = next_attention();
                if (a.which == AttentionWhich::Q) {
                    act_q(a.e);
                    continue;
                }
                act_p(a.e);
                settled = a.e > 0 || st_.schemes.empty();
                break;
            }
            log_.end_stage();
            out_.n_by_stage.push_back(st_.n);
            out_.s_by_stage.push_back(st_.s);
            for (Nat x : changed_) out_.d_history[x].push_back({stage_, st_.d[x].v});
        }
        if (!settled) throw Error("horizon too small to settle s_0");
        out_.logA = log_.take();
        out_.a_orbits = st_.a_orbits;
        for (const auto& o : st_.opponents) out_.opponent_orbits.push_back(o.orbits());
        for (const auto& de : st_.d) out_.d.push_back(de.v);
        out_.n = st_.n;
        out_.s = st_.s;
        out_.acted = st_.acted;
        return std::move(out_);
    }

private:
    static constexpr std::size_t kUnstalled = static_cast<std::size_t>(-1);

    void event(PathEvent::Kind k, std::size_t e, Nat x, Nat from, Nat to, std::string tag) {
        out_.trace.push_back({k, st_.tick, stage_, e, x, from, to, std::move(tag)});
    }

    void set_entry(Nat x, std::size_t j, Nat value, const char* tag) {
        Nat& v = st_.d[x].v[j];
        if (v == value) return;
        event(PathEvent::Kind::entry, j, x, v, value, tag);
        v = value;
        changed_.insert(x);
    }

    void tick() {
        ++st_.tick;
        for (auto& o : st_.opponents) o.step(st_.tick, st_.a_orbits);
    }

    void emit_orbit(Nat size) {
        Elem first = log_.fresh(), prev = first;
        for (Nat k = 1; k < size; ++k) {
            Elem e = log_.fresh();
            log_.assign(prev, e);
            prev = e;
        }
        log_.assign(prev, first);
        st_.a_orbits.push_back({size, stage_, st_.tick});
        st_.a_census.add(size, st_.tick);
    }

    bool live(std::size_t j) const { return j < st_.opponents.size() && !st_.acted[j]; }

    bool stalled(std::size_t j) const { return stalled_[j] == st_.opponents[j].orbits().size(); }

    // Sub-stage at which B_j's multiplicities first covered `need`, if they do now.
    std::optional<Stage> covered_at(std::size_t j, const std::map<Nat, std::size_t>& need) const {
        Stage t = 1;
        for (const auto& [size, c] : need) {
            if (c == 0) continue;
            auto tb = st_.opponents[j].census().tick_of(size, c);
            if (!tb) return std::nullopt;
            t = std::max(t, *tb);
        }
        return t;
    }

    std::map<Nat, std::size_t> a_before_stage(Stage s) const {
        std::map<Nat, std::size_t> need;
        for (const auto& o : st_.a_orbits) {
            if (o.stage >= s) break;
            ++need[o.size];
        }
        return need;
    }

    std::map<Nat, std::size_t> a_by_tick(Stage t) const {
        std::map<Nat, std::size_t> need;
        for (const auto& [size, ts] : st_.a_census.ticks)
            need[size] = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
        return need;
    }

    // Zero the j-th entry of every d(x) with x >= from.
    void zero_from(std::size_t j, Nat from) {
        for (Nat x = from; x < st_.d.size(); ++x)
            if (st_.d[x].v.size() > j) set_entry(x, j, 0, st_.d[x].special ? "special" : "zero");
    }

    void update_special() {
        for (std::size_t i = 0; i < st_.levels(); ++i) {
            const Stage si = st_.s[i];
            if (si >= stage_ || si >= st_.d.size()) continue;
            std::optional<std::map<Nat, std::size_t>> base;
            for (std::size_t j = 0; j <= i; ++j) {
                if (!live(j)) continue;
                if (!base) base = a_before_stage(si);
                auto t = covered_at(j, *base);
                if (t && i + 1 < st_.acted.size() && st_.acted[i + 1]) {
                    auto t2 = covered_at(j, a_by_tick(*st_.acted[i + 1]));
                    t = t2 ? std::optional<Stage>(std::max(*t, *t2)) : std::nullopt;
                }
                if (t) {
                    if (st_.d[si].v[j] == 0) set_entry(si, j, *t, "special");
                } else {
                    zero_from(j, si);
                }
            }
        }
    }

    AttentionKind next_attention() {
        for (std::size_t e = 0;; ++e) {
            auto a = requires_attention(st_, e, stage_);
            if (a) {
                event(PathEvent::Kind::attention, e, 0, 0, 0, a->which == AttentionWhich::Q ? "Q" : "P");
                if (a->which == AttentionWhich::P && e < due_.size()) due_[e] = 1;
                return *a;
            }
            if (due_[e]) {
                due_[e] = 0;
                event(PathEvent::Kind::attention, e, *st_.disagreement(e, stage_), 0, 0, "diagonalized");
            }
        }
    }

    Nat fresh_size() const {
        Nat m = st_.n.back();
        if (!st_.a_census.ticks.empty()) m = std::max(m, st_.a_census.ticks.rbegin()->first);
        for (const auto& o : st_.opponents)
            if (!o.census().ticks.empty()) m = std::max(m, o.census().ticks.rbegin()->first);
        return m + 1;
    }

    void act_q(std::size_t e) {
        Nat witness = 0;
        for (const auto& [size, t] : st_.opponents[e].census().ticks)
            if (size >= st_.n[e] && t.size() > st_.a_census.count(size)) {
                witness = size;
                break;
            }
        const Nat fresh = fresh_size();
        event(PathEvent::Kind::act, e, witness, st_.n[e], fresh, "");
        st_.acted[e] = st_.tick;
        for (std::size_t k = e; k < st_.levels(); ++k) {
            const Nat to = fresh + (k - e);
            if (k > e) event(PathEvent::Kind::kick, k, 0, st_.n[k], to, "n");
            st_.n[k] = to;
        }
        zero_from(e, st_.s[e]);
    }

    void move_s(std::size_t i, Stage to) {
        if (st_.s[i] == to) return;
        event(PathEvent::Kind::kick, i, 0, st_.s[i], to, "s");
        st_.s[i] = to;
    }

    void reset(Nat x, std::size_t level, bool special) {
        DEntry& de = st_.d[x];
        for (std::size_t j = 0; j < std::max(de.v.size(), level + 1); ++j) {
            const Nat from = j < de.v.size() ? de.v[j] : 0;
            event(PathEvent::Kind::entry, j, x, from, 0, j <= level ? "init" : "drop");
        }
        de = DEntry{TupleValue(level + 1, 0), level, special, 0, 0};
        changed_.insert(x);
    }

    // Value for the j-th entry of the defined position x, waiting on B_j when needed.
    std::pair<Nat, const char*> compute(Nat x, std::size_t j, bool zero_before) {
        if (!live(j) || zero_before || !st_.opponent_inside_a(j)) return {0, "zero"};
        const DEntry& de = st_.d[x];
        auto& b = st_.opponents[j];
        for (Stage waited = 0;; ++waited) {
            if (auto t = b.census().tick_of(de.size, de.rank)) return {*t, "define"};
            if (!st_.opponent_inside_a(j)) return {0, "zero"};
            if (stalled(j) || waited >= st_.cfg.wait_cap) {
                stalled_[j] = b.orbits().size();
                return {0, "timeout"};
            }
            tick();
        }
    }

    // Let every live opponent catch up with A, within the waiting cap.
    void sync() {
        for (std::size_t j = 0; j < st_.opponents.size(); ++j) {
            if (!live(j)) continue;
            std::map<Nat, std::size_t> need;
            for (const auto& [size, ts] : st_.a_census.ticks) need[size] = ts.size();
            for (Stage waited = 0;; ++waited) {
                if (!st_.opponent_inside_a(j) || covered_at(j, need)) break;
                if (stalled(j) || waited >= st_.cfg.wait_cap) {
                    stalled_[j] = st_.opponents[j].orbits().size();
                    break;
                }
                tick();
            }
        }
    }

    void act_p(std::size_t i) {
        move_s(i, stage_ + 1);
        for (std::size_t k = i + 1; k < st_.levels(); ++k)
            move_s(k, std::max(st_.s[k], static_cast<Stage>(stage_ + 1 + (k - i))));
        const Nat lo = i == 0 ? 0 : st_.s[i - 1] + Nat{1};
        if (st_.d.size() < stage_ + 2u) st_.d.resize(stage_ + 2);
        const std::size_t orbits_before = st_.a_orbits.size();
        for (Nat x = lo; x <= stage_; ++x) {
            DEntry& de = st_.d[x];
            if (!de.special && de.level == i && !de.v.empty()) continue;
            reset(x, i, false);
            emit_orbit(st_.n[i]);
            st_.d[x].size = st_.n[i];
            st_.d[x].rank = st_.a_census.count(st_.n[i]);
        }
        if (st_.a_orbits.size() == orbits_before) emit_orbit(st_.n[i]);
        reset(stage_ + 1, i, true);

        for (std::size_t j = 0; j <= i; ++j) {
            bool zero_before = false;
            for (Nat y = 0; y < lo && !zero_before; ++y) zero_before = st_.d[y].v.size() > j && st_.d[y].v[j] == 0;
            for (Nat x = lo; x <= stage_; ++x) {
                if (st_.d[x].v[j] == 0) {
                    auto [v, tag] = compute(x, j, zero_before);
                    set_entry(x, j, v, tag);
                }
                zero_before = zero_before || st_.d[x].v[j] == 0;
            }
        }
        sync();
    }

    PathState st_;
    LogBuilder log_;
    PathOutput out_;
    Stage stage_ = 0;
    std::vector<char> due_;
    std::vector<std::size_t> stalled_;
    std::set<Nat> changed_;
};

}  // namespace

PathOutput build_pathological(const PathConfig& cfg, Stage horizon) {
    PathBuilder b(cfg);
    return b.run(horizon);
}

Stage decode_q(const std::vector<TupleValue>& d, std::size_t e, Stage s_i, std::size_t j) {
    const Nat last = s_i + 2 * (j + 1) + 1;
    if (last >= d.size()) throw Error("d is not defined far enough for this j");
    Nat bound = 0;
    for (Nat x = s_i; x <= last; ++x) {
        if (d[x].size() <= e || d[x][e] == 0)
            throw Error("entry " + std::to_string(e) + " of d(" + std::to_string(x) + ") is 0");
        bound = std::max(bound, d[x][e]);
    }
    return static_cast<Stage>(bound);
}

DecodeQCheck verify_decode_q(const PathOutput& out, std::size_t e, std::size_t i, std::size_t j) {
    if (i >= out.s.size() || e >= out.opponent_orbits.size()) throw Error("no such level or opponent");
    const Stage si = out.s[i];
    DecodeQCheck c;
    c.bound = decode_q(out.d, e, si, j);
    std::size_t seen = 0;
    std::map<Nat, std::size_t> rank;
    bool found = false;
    for (const auto& o : out.a_orbits) {
        ++rank[o.size];
        if (o.stage < si) continue;
        if (seen++ == j) {
            c.size = o.size;
            c.rank = rank[o.size];
            found = true;
            break;
        }
    }
    if (!found) throw Error("A has fewer than j+1 orbits after s_i");
    std::size_t have = 0;
    for (const auto& o : out.opponent_orbits[e]) have += o.size == c.size && o.tick <= c.bound;
    c.covered = have >= c.rank;
    return c;
}

namespace {

const char* kind_name(PathEvent::Kind k) {
    switch (k) {
        case PathEvent::Kind::act: return "act";
        case PathEvent::Kind::kick: return "kick";
        case PathEvent::Kind::entry: return "entry";
        case PathEvent::Kind::attention: return "attention";
    }
    return "";
}

}  // namespace

std::string event_json(const PathEvent& ev) {
    nlohmann::ordered_json j;
    j["t"] = ev.t;
    j["event"] = kind_name(ev.kind);
    j["stage"] = ev.stage;
    switch (ev.kind) {
        case PathEvent::Kind::act:
            j["e"] = ev.e;
            j["size"] = ev.x;
            j["n_from"] = ev.from;
            j["n_to"] = ev.to;
            break;
        case PathEvent::Kind::kick:
            j["marker"] = ev.tag;
            j["i"] = ev.e;
            j["from"] = ev.from;
            j["to"] = ev.to;
            break;
        case PathEvent::Kind::entry:
            j["x"] = ev.x;
            j["j"] = ev.e;
            j["from"] = ev.from;
            j["to"] = ev.to;
            j["cause"] = ev.tag;
            break;
        case PathEvent::Kind::attention:
            j["req"] = ev.tag;
            j["e"] = ev.e;
            if (ev.tag == "diagonalized") j["input"] = ev.x;
            break;
    }
    return j.dump();
}

std::string trace_jsonl(const std::vector<PathEvent>& trace) {
    std::string s;
    for (const auto& ev : trace) {
        s += event_json(ev);
        s += '\n';
    }
    return s;
}

TraceCheck check_trace(const PathOutput& out, std::size_t schemes) {
    TraceCheck c;
    auto problem = [&](bool& flag, std::string what) {
        flag = false;
        if (c.problems.size() < 32) c.problems.push_back(std::move(what));
    };
    std::map<std::size_t, int> acts;
    std::map<std::size_t, std::set<Nat>> zeros;
    std::map<std::size_t, std::string> last_p;
    for (const auto& ev : out.trace) {
        switch (ev.kind) {
            case PathEvent::Kind::act:
                if (++acts[ev.e] > 1) problem(c.single_act, "Q_" + std::to_string(ev.e) + " acted twice");
                for (const auto& o : out.a_orbits)
                    if (o.stage >= ev.stage && o.size == ev.x)
                        problem(c.sizes_retired, "size " + std::to_string(ev.x) + " enumerated after acting");
                break;
            case PathEvent::Kind::entry: {
                auto& z = zeros[ev.e];
                if (ev.tag == "drop") {
                    z.erase(ev.x);
                    break;
                }
                const bool exempt = ev.tag == "init" || ev.tag == "special";
                if (!exempt && ev.from != 0 && ev.to != ev.from) {
                    const bool justified = ev.to == 0 && !z.empty() && *z.begin() < ev.x;
                    if (!justified)
                        problem(c.permanence, "d(" + std::to_string(ev.x) + ")[" + std::to_string(ev.e) + "] changed from " +
                                                  std::to_string(ev.from));
                }
                if (ev.to == 0)
                    z.insert(ev.x);
                else
                    z.erase(ev.x);
                break;
            }
            case PathEvent::Kind::attention:
                if (ev.tag == "P" || ev.tag == "diagonalized") last_p[ev.e] = ev.tag;
                break;
            case PathEvent::Kind::kick:
                if (ev.to < ev.from) problem(c.markers_monotone, "marker moved down");
                break;
        }
    }
    for (std::size_t st = 0; st < out.n_by_stage.size(); ++st) {
        const auto& n = out.n_by_stage[st];
        const auto& s = out.s_by_stage[st];
        for (std::size_t i = 1; i < n.size(); ++i)
            if (n[i] <= n[i - 1] || s[i] <= s[i - 1])
                problem(c.markers_monotone, "markers not increasing at stage " + std::to_string(st));
        if (st > 0)
            for (std::size_t i = 0; i < n.size(); ++i)
                if (n[i] < out.n_by_stage[st - 1][i] || s[i] < out.s_by_stage[st - 1][i])
                    problem(c.markers_monotone, "marker decreased at stage " + std::to_string(st));
    }
    for (std::size_t e = 0; e < schemes; ++e)
        if (last_p[e] != "diagonalized") problem(c.diagonalized, "P_" + std::to_string(e) + " not diagonalized");
    return c;
}

}  // namespace punctlab
