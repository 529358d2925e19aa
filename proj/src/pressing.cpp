#include "punctlab/pressing.hpp"

#include <algorithm>

namespace punctlab {

namespace {

constexpr std::uint8_t kSymbols = 4;

PressOpponentKind press_kind_from_string(const std::string& s) {
    if (s == "copier") return PressOpponentKind::copier;
    if (s == "faker") return PressOpponentKind::faker;
    if (s == "pender") return PressOpponentKind::pender;
    if (s == "points") return PressOpponentKind::points;
    throw ConfigError("unknown pressing opponent kind: " + s);
}

const char* kind_name(PressEvent::Kind k) {
    switch (k) {
        case PressEvent::Kind::start: return "start";
        case PressEvent::Kind::extend: return "extend";
        case PressEvent::Kind::close: return "close";
        case PressEvent::Kind::switch_: return "switch";
        case PressEvent::Kind::tail_extend: return "tail_extend";
        case PressEvent::Kind::tail_close: return "tail_close";
        case PressEvent::Kind::pending: return "pending";
        case PressEvent::Kind::inactive: return "inactive";
        case PressEvent::Kind::retire: return "retire";
    }
    return "?";
}

// Punctual opponent structure in the pressing signature.
class PressOpponent {
public:
    explicit PressOpponent(PressOpponentSpec spec) : spec_(spec), log_(pressing_signature()) {}

    void step(Stage s, const StructureLog& src) {
        log_.begin_stage(s);
        if (spec_.kind == PressOpponentKind::points) {
            Elem v = log_.fresh();
            for (std::uint8_t f = 0; f < kSymbols; ++f) log_.assign(f, v, v);
            log_.end_stage();
            return;
        }
        if (s >= spec_.delay && s - spec_.delay < src.events.size()) {
            const auto& ev = src.events[s - spec_.delay];
            for (Elem k = 0; k < ev.new_count; ++k) map_.push_back(log_.fresh());
            for (const auto& a : ev.assign) log_.assign(a.symbol, map_[a.src], map_[a.dst]);
        }
        if (spec_.kind == PressOpponentKind::faker && !extra_ && s >= spec_.at) {
            extra_ = true;
            Elem r = log_.size();
            for (Nat j = 0; j < spec_.size; ++j) log_.fresh();
            for (Nat j = 0; j < spec_.size; ++j) {
                Elem v = r + static_cast<Elem>(j);
                log_.assign(kC, v, j + 1 == spec_.size ? r : v + 1);
                log_.assign(kR, v, r);
                log_.assign(kS, v, r);
                log_.assign(kP, v, v);
            }
        }
        if (spec_.kind == PressOpponentKind::pender) {
            if (!extra_ && s >= spec_.at) {
                extra_ = true;
                chain_root_ = chain_last_ = log_.fresh();
                for (std::uint8_t f : {kR, kS, kP}) log_.assign(f, chain_root_, chain_root_);
                chain_len_ = 1;
                if (spec_.size == 1) {
                    log_.assign(kC, chain_root_, chain_root_);
                    chain_done_ = true;
                }
            } else if (extra_ && !chain_done_) {
                Elem v = log_.fresh();
                log_.assign(kC, chain_last_, v);
                log_.assign(kR, v, chain_root_);
                log_.assign(kS, v, v);
                log_.assign(kP, v, v);
                chain_last_ = v;
                if (++chain_len_ == spec_.size) {
                    log_.assign(kC, v, chain_root_);
                    chain_done_ = true;
                }
            }
        }
        log_.end_stage();
    }

    const PressOpponentSpec& spec() const { return spec_; }
    const LogBuilder& log() const { return log_; }
    StructureLog take() { return log_.take(); }

private:
    PressOpponentSpec spec_;
    LogBuilder log_;
    std::vector<Elem> map_;
    bool extra_ = false;
    Elem chain_root_ = 0, chain_last_ = 0;
    Nat chain_len_ = 0;
    bool chain_done_ = false;
};

class PressBuilder {
public:
    PressBuilder(const PressConfig& cfg, Stage horizon)
        : cfg_(cfg), horizon_(horizon), B_(pressing_signature()), B2_(pressing_signature()) {
        cfg_.W.validate();
        for (const auto& p : cfg_.catalog) p.validate();
        for (const auto& sp : cfg_.opponents) {
            if (sp.delay == 0) throw ConfigError("opponent delay must be positive");
            if ((sp.kind == PressOpponentKind::faker) && sp.size == 0) throw ConfigError("faker needs a positive size");
            opps_.emplace_back(sp);
        }
        trackers_.resize(opps_.size());
    }

    PressOutput run() {
        for (Stage s = 0; s < horizon_; ++s) {
            stage_ = s;
            B_.begin_stage(s);
            B2_.begin_stage(s);
            for (auto& o : opps_) o.step(s, o.spec().mirror ? B2_.log() : B_.log());
            const Elem before = B_.size();
            while (B_.size() == before) act();
            B_.end_stage();
            B2_.end_stage();
            out_.open_by_stage.push_back(*open_);
        }
        if (comps_.empty() || !comps_[0].close) throw Error("horizon too small to close component 0");
        out_.logB = B_.take();
        out_.logB2 = B2_.take();
        out_.components = comps_;
        for (auto& o : opps_) out_.opponent_logs.push_back(o.take());
        for (const auto& t : trackers_) out_.statuses.push_back(t.status());
        return std::move(out_);
    }

private:
    void emit(PressEvent::Kind k, std::size_t e, Nat size = 0, Nat bound = 0, std::size_t level = 0,
              std::string tag = {}) {
        out_.trace.push_back({k, stage_, e, size, bound, level, std::move(tag)});
    }

    Elem fresh(PressLabel lab) {
        Elem a = B_.fresh();
        B2_.fresh();
        out_.labels.push_back(lab);
        return a;
    }

    void set(std::uint8_t f, Elem src, Elem dst) {
        B_.assign(f, src, dst);
        B2_.assign(f, src, dst);
    }

    // An n-cycle under C with R to `root` (the first new element when kNone); P is the
    // identity except on the first element when `skip_p`.
    Elem cycle(PressFamily fam, std::size_t e, std::uint32_t i, Nat n, Elem root, bool skip_p = false) {
        Elem first = B_.size();
        for (Nat j = 0; j < n; ++j) fresh({fam, static_cast<std::uint32_t>(e), i, static_cast<std::uint32_t>(j)});
        if (root == kNone) root = first;
        for (Nat j = 0; j < n; ++j) {
            Elem v = first + static_cast<Elem>(j);
            set(kC, v, j + 1 == n ? first : v + 1);
            set(kR, v, root);
            if (!(skip_p && j == 0)) set(kP, v, v);
        }
        return first;
    }

    Nat allocate(Nat bound, char what, std::size_t e) {
        for (Nat m = 1; m < bound; ++m) {
            if (book_.used.count(m) || book_.retired.count(m)) continue;
            book_.used.insert(m);
            out_.allocations.push_back({m, bound, what, e, stage_});
            return m;
        }
        throw Error("no available size below M = " + std::to_string(bound));
    }

    void retire(const std::vector<Nat>& sizes, std::size_t n) {
        for (Nat m : sizes) {
            if (book_.retired.count(m) || book_.used.count(m)) continue;
            book_.retired.insert(m);
            out_.retired.emplace_back(m, stage_);
            emit(PressEvent::Kind::retire, n, m);
        }
    }

    // Updates opponents n <= e/2 and reports whether each one not inactive has `size`
    // or a witness up to `bound`.
    bool pressed(std::size_t e, Nat size, Nat bound, std::size_t level) {
        bool ok = true;
        for (std::size_t n = 0; n <= e / 2 && n < opps_.size(); ++n) {
            auto& tr = trackers_[n];
            const OpponentState was = tr.status().state;
            std::vector<Nat> ret;
            const auto& st = tr.update(opps_[n].log(), bound, level, book_, ret);
            retire(ret, n);
            if (st.state != was) {
                if (st.state == OpponentState::pending) emit(PressEvent::Kind::pending, n, 0, bound, st.level);
                if (st.state == OpponentState::inactive) emit(PressEvent::Kind::inactive, n, st.size, bound, level, st.reason);
            }
            if (st.state == OpponentState::inactive) continue;
            if (st.state == OpponentState::pending)
                ok &= tr.witness_at(bound);
            else
                ok &= tr.count(size) > 0;
        }
        return ok;
    }

    bool ready(std::size_t e) const {
        const auto& c = comps_[e];
        if (!c.close || c.switched) return false;
        if (e % 2 == 0) return e + 2 < comps_.size() && comps_[e + 2].close.has_value();
        auto [a, x] = unpair((e - 1) / 2);
        if (a == 0) return cfg_.W.contains_by(x, stage_);
        const std::size_t k = static_cast<std::size_t>(a - 1);
        const Stage conv = k < cfg_.catalog.size() ? cfg_.catalog[k].convergence(x) : 0;
        return conv <= stage_;
    }

    void act() {
        if (open_ && open_->kind == 'c') {
            auto& c = comps_[open_->e];
            if (pressed(c.e, c.x, press_M(c.e + 1), c.e)) {
                for (Nat j = 0; j < c.x; ++j) set(kS, last_ + static_cast<Elem>(j), last_);
                comps_[c.e].close = stage_;
                book_.max_count[c.x] = 2 * static_cast<std::size_t>(c.count);
                emit(PressEvent::Kind::close, c.e, c.x);
                open_.reset();
                return;
            }
            Elem v = cycle(PressFamily::b, c.e, c.spines, c.x, c.root());
            for (Nat j = 0; j < c.x; ++j) set(kS, last_ + static_cast<Elem>(j), v);
            last_ = v;
            ++c.spines;
            c.count += static_cast<Elem>(c.x);
            emit(PressEvent::Kind::extend, c.e, c.x);
            return;
        }
        if (open_ && open_->kind == 't') {
            auto& c = comps_[open_->e];
            const std::size_t top = comps_.size() - 1;
            if (pressed(c.e, c.y, press_M(top + 1), top)) {
                for (Nat j = 0; j < c.y; ++j) set(kS, last_ + static_cast<Elem>(j), last_);
                c.tail_close = stage_;
                book_.max_count[c.y] = c.tail_count;
                emit(PressEvent::Kind::tail_close, c.e, c.y);
                open_.reset();
                return;
            }
            Elem v = cycle(PressFamily::t, c.e, tail_spines_, c.y, c.tail_root());
            for (Nat j = 0; j < c.y; ++j) set(kS, last_ + static_cast<Elem>(j), v);
            last_ = v;
            ++tail_spines_;
            c.tail_count += static_cast<Elem>(c.y);
            emit(PressEvent::Kind::tail_extend, c.e, c.y);
            return;
        }
        for (std::size_t e = 0; e < comps_.size(); ++e)
            if (ready(e)) {
                do_switch(e);
                return;
            }
        start(comps_.size());
    }

    void start(std::size_t e) {
        ComponentRecord c;
        c.e = e;
        c.x = allocate(press_M(e + 1), 'x', e);
        c.start = stage_;
        c.first = cycle(PressFamily::b, e, 0, c.x, kNone);
        c.count = static_cast<Elem>(c.x);
        c.spines = 1;
        last_ = c.first;
        emit(PressEvent::Kind::start, e, c.x, press_M(e + 1));
        comps_.push_back(c);
        open_ = OpenBlock{'c', e};
    }

    void do_switch(std::size_t e) {
        const std::size_t top = comps_.size() - 1;
        const Nat y = allocate(press_M(top + 1), 'y', e);
        auto& c = comps_[e];
        c.y = y;
        c.switched = stage_;
        c.dup_first = B_.size();
        for (Elem k = 0; k < c.count; ++k) {
            PressLabel lab = out_.labels[c.first + k];
            lab.family = PressFamily::d;
            fresh(lab);
        }
        auto shift = [&](Elem v) { return c.dup_first + (v - c.first); };
        for (Elem k = 0; k < c.count; ++k) {
            const Elem src = c.first + k;
            for (std::uint8_t f : {kS, kR, kC}) set(f, shift(src), shift(B_.value(f, src)));
            set(kP, shift(src), shift(src));
        }
        const Elem t0 = cycle(PressFamily::t, e, 0, y, kNone, true);
        const Elem t1 = cycle(PressFamily::t, e, 1, y, t0, true);
        B_.assign(kP, t0, c.root());
        B2_.assign(kP, t0, c.dup_root());
        B_.assign(kP, t1, c.dup_root());
        B2_.assign(kP, t1, c.root());
        for (Nat j = 0; j < y; ++j) set(kS, t0 + static_cast<Elem>(j), t1);
        c.tail_first = t0;
        c.tail_count = static_cast<Elem>(2 * y);
        tail_spines_ = 2;
        last_ = t1;
        emit(PressEvent::Kind::switch_, e, y, press_M(top + 1));
        open_ = OpenBlock{'t', e};
    }

    PressConfig cfg_;
    Stage horizon_;
    Stage stage_ = 0;
    LogBuilder B_, B2_;
    std::vector<PressOpponent> opps_;
    std::vector<OpponentTracker> trackers_;
    std::vector<ComponentRecord> comps_;
    SizeBook book_;
    std::optional<OpenBlock> open_;
    Elem last_ = 0;
    std::uint32_t tail_spines_ = 0;
    PressOutput out_;
};

Nat root_cycle(const Truncation& t, Elem v, std::map<Elem, Nat>& cache) {
    const Elem r = t.map(kR)[v];
    auto it = cache.find(r);
    if (it != cache.end()) return it->second;
    Nat n = 0;
    Elem cur = r;
    do {
        cur = t.map(kC)[cur];
        ++n;
    } while (cur != r && cur != kNone && n <= t.size);
    return cache[r] = cur == r ? n : 0;
}

}  // namespace

Signature pressing_signature() { return Signature({"S", "P", "R", "C"}); }

Nat press_M(std::size_t e) { return 4 * static_cast<Nat>(e); }

PressConfig press_config_from_json(const nlohmann::json& j) {
    PressConfig c;
    if (j.contains("W")) c.W = ce_from_json(j.at("W"));
    if (j.contains("catalog"))
        for (const auto& p : j.at("catalog")) c.catalog.push_back(clocked_from_json(p));
    if (j.contains("opponents"))
        for (const auto& o : j.at("opponents")) {
            PressOpponentSpec sp;
            sp.kind = press_kind_from_string(o.at("kind").get<std::string>());
            sp.delay = o.value("delay", Stage{1});
            sp.mirror = o.value("mirror", false);
            sp.size = o.value("size", Nat{0});
            sp.at = o.value("at", Stage{1});
            if (sp.delay == 0) throw ConfigError("opponent delay must be positive");
            if (sp.kind == PressOpponentKind::faker && sp.size == 0) throw ConfigError("faker needs a positive size");
            c.opponents.push_back(sp);
        }
    return c;
}

std::int64_t GTable::operator()(Nat z) const {
    auto [a, x] = unpair(z);
    if (a == 0) {
        auto st = W.entry_stage(x);
        return st ? static_cast<std::int64_t>(*st) : -1;
    }
    const std::size_t k = static_cast<std::size_t>(a - 1);
    return k < catalog.size() ? static_cast<std::int64_t>(catalog[k].convergence(x)) : 0;
}

std::string to_string(OpponentState s) {
    switch (s) {
        case OpponentState::active: return "active";
        case OpponentState::pending: return "pending";
        case OpponentState::inactive: return "inactive";
    }
    return "?";
}

std::size_t OpponentTracker::count(Nat size) const {
    auto it = counts_.find(size);
    return it == counts_.end() ? 0 : it->second;
}

bool OpponentTracker::witness_at(Nat bound) const {
    if (status_.state != OpponentState::pending) return false;
    auto it = roots_.find(wroot_);
    return it != roots_.end() && it->second.closed == 0 && it->second.explored >= bound;
}

OpponentTracker::RootScan& OpponentTracker::explore(const LogBuilder& opp, Elem r, Nat bound) {
    auto [it, fresh] = roots_.try_emplace(r);
    RootScan& rs = it->second;
    if (fresh) rs.cur = r;
    while (rs.closed == 0 && rs.explored < bound && opp.assigned(kC, rs.cur)) {
        rs.cur = opp.value(kC, rs.cur);
        ++rs.explored;
        if (rs.cur == r) rs.closed = rs.explored;
    }
    return rs;
}

void OpponentTracker::deactivate(std::string reason, Nat size) {
    status_.state = OpponentState::inactive;
    status_.reason = std::move(reason);
    status_.size = size;
}

void OpponentTracker::resolve(Nat m, const SizeBook& book, std::vector<Nat>& retire) {
    const std::size_t k = ++counts_[m];
    if (!book.used.count(m)) {
        if (!book.retired.count(m)) retire.push_back(m);
        deactivate("new-size", m);
        return;
    }
    auto it = book.max_count.find(m);
    if (it != book.max_count.end() && k > it->second) deactivate("multiplicity", m);
}

const OpponentStatus& OpponentTracker::update(const LogBuilder& opp, Nat bound, std::size_t level,
                                              const SizeBook& book, std::vector<Nat>& retire) {
    if (status_.state == OpponentState::inactive) return status_;
    while (scanned_ < opp.size()) unresolved_.push_back(scanned_++);
    if (status_.state == OpponentState::pending) {
        auto& rs = explore(opp, wroot_, bound);
        if (rs.closed != 0 && !book.used.count(rs.closed)) {
            if (!book.retired.count(rs.closed)) retire.push_back(rs.closed);
            deactivate("new-size", rs.closed);
            return status_;
        }
        if (rs.closed != 0) status_ = OpponentStatus{};
    }
    std::size_t keep = 0;
    for (std::size_t k = 0; k < unresolved_.size(); ++k) {
        const Elem b = unresolved_[k];
        if (status_.state == OpponentState::inactive || !opp.assigned(kR, b)) {
            unresolved_[keep++] = b;
            continue;
        }
        const Elem r = opp.value(kR, b);
        auto& rs = explore(opp, r, bound);
        if (rs.closed != 0) {
            resolve(rs.closed, book, retire);
            continue;
        }
        if (rs.explored >= bound && status_.state == OpponentState::active) {
            status_.state = OpponentState::pending;
            status_.witness = b;
            status_.level = level;
            wroot_ = r;
        }
        unresolved_[keep++] = b;
    }
    unresolved_.resize(keep);
    if (status_.state != OpponentState::inactive)
        for (const auto& [m, cap] : book.max_count)
            if (count(m) > cap) {
                deactivate("multiplicity", m);
                break;
            }
    return status_;
}

PressOutput build_pressing(const PressConfig& cfg, Stage horizon) { return PressBuilder(cfg, horizon).run(); }

std::vector<bool> closed_part(const Truncation& t) {
    const Elem n = t.size;
    std::vector<bool> in(n, true);
    std::vector<std::vector<Elem>> pre(n);
    std::vector<Elem> work;
    for (Elem v = 0; v < n; ++v)
        for (std::uint8_t f = 0; f < kSymbols; ++f) {
            const Elem w = t.map(f)[v];
            if (w == kNone || w >= n) {
                if (in[v]) work.push_back(v);
                in[v] = false;
            } else {
                pre[w].push_back(v);
            }
        }
    while (!work.empty()) {
        const Elem w = work.back();
        work.pop_back();
        for (Elem v : pre[w])
            if (in[v]) {
                in[v] = false;
                work.push_back(v);
            }
    }
    return in;
}

std::vector<IsoTable> brute_force_isos(const Truncation& a, const Truncation& b, std::size_t limit) {
    const auto ca = closed_part(a), cb = closed_part(b);
    std::vector<IsoTable> found;
    if (std::count(ca.begin(), ca.end(), true) != std::count(cb.begin(), cb.end(), true)) return found;
    std::map<Elem, Nat> cache_a, cache_b;
    auto inv = [](const Truncation& t, Elem v, std::map<Elem, Nat>& cache) {
        Nat key = root_cycle(t, v, cache);
        key = key * 8 + (t.map(kR)[v] == v) * 4 + (t.map(kP)[v] == v) * 2 + (t.map(kS)[v] == v);
        return key;
    };
    std::map<Nat, std::vector<Elem>> bucket;
    for (Elem v = 0; v < b.size; ++v)
        if (cb[v]) bucket[inv(b, v, cache_b)].push_back(v);
    std::vector<Nat> key_a(a.size, 0);
    for (Elem v = 0; v < a.size; ++v)
        if (ca[v]) key_a[v] = inv(a, v, cache_a);

    IsoTable fa(a.size, kNone), fb(b.size, kNone);
    std::vector<Elem> trail;
    auto assign = [&](Elem u0, Elem v0) {
        std::vector<std::pair<Elem, Elem>> st{{u0, v0}};
        while (!st.empty()) {
            auto [u, v] = st.back();
            st.pop_back();
            if (fa[u] == v) continue;
            if (fa[u] != kNone || fb[v] != kNone || !cb[v] || key_a[u] != inv(b, v, cache_b)) return false;
            fa[u] = v;
            fb[v] = u;
            trail.push_back(u);
            for (std::uint8_t f = 0; f < kSymbols; ++f) st.emplace_back(a.map(f)[u], b.map(f)[v]);
        }
        return true;
    };
    auto undo = [&](std::size_t mark) {
        while (trail.size() > mark) {
            Elem u = trail.back();
            trail.pop_back();
            fb[fa[u]] = kNone;
            fa[u] = kNone;
        }
    };
    // iterative search over the least unmapped element of the closed part
    struct Frame {
        Elem u;
        std::size_t next;
        std::size_t mark;
    };
    std::vector<Frame> stack;
    auto next_free = [&](Elem from) {
        while (from < a.size && (!ca[from] || fa[from] != kNone)) ++from;
        return from;
    };
    Elem u = next_free(0);
    if (u == a.size) {
        found.push_back(fa);
        return found;
    }
    stack.push_back({u, 0, trail.size()});
    while (!stack.empty() && found.size() < limit) {
        Frame& fr = stack.back();
        undo(fr.mark);
        const auto& cands = bucket[key_a[fr.u]];
        bool advanced = false;
        while (fr.next < cands.size()) {
            const Elem v = cands[fr.next++];
            if (fb[v] != kNone) continue;
            if (!assign(fr.u, v)) {
                undo(fr.mark);
                continue;
            }
            Elem w = next_free(fr.u);
            if (w == a.size) {
                found.push_back(fa);
                undo(fr.mark);
                if (found.size() >= limit) break;
                continue;
            }
            stack.push_back({w, 0, trail.size()});
            advanced = true;
            break;
        }
        if (!advanced && found.size() < limit) {
            undo(stack.back().mark);
            stack.pop_back();
        }
    }
    return found;
}

std::int64_t decode_g(const PressOutput& out, const ElemMap& f, const ElemMap& f_inv, Nat z, const GTable& g) {
    const auto& comps = out.components;
    auto need = [&](std::size_t e) -> const ComponentRecord& {
        if (e >= comps.size()) throw Error("component " + std::to_string(e) + " not built");
        return comps[e];
    };
    auto image = [&](Elem r) {
        Elem img = f(r);
        if (f_inv(img) != r) throw Error("f_inv does not invert f");
        return img;
    };
    Elem bound = 1;
    for (Nat e = 0; e <= z; ++e) {
        const auto& c = need(2 * e);
        if (c.root() >= bound) throw Error("bound does not reach the root of component " + std::to_string(2 * e));
        if (!c.switched) throw Error("component " + std::to_string(2 * e) + " not switched");
        const Elem img = image(c.root());
        if (img != c.dup_root()) throw Error("image breaks tail rigidity at component " + std::to_string(2 * e));
        bound = img;
    }
    const auto& c = need(2 * z + 1);
    if (c.root() >= bound) throw Error("bound does not reach the root of component " + std::to_string(2 * z + 1));
    const Elem J = image(c.root());
    if (c.switched ? J != c.dup_root() : J != c.root())
        throw Error("image breaks tail rigidity at component " + std::to_string(2 * z + 1));
    auto [a, x] = unpair(z);
    if (a == 0) {
        auto st = g.W.entry_stage(x);
        return st && *st <= J ? static_cast<std::int64_t>(*st) : -1;
    }
    const std::size_t k = static_cast<std::size_t>(a - 1);
    const Stage conv = k < g.catalog.size() ? g.catalog[k].convergence(x) : 0;
    if (conv > J) throw Error("bound below the convergence stage");
    return conv;
}

IsoTable canonical_press_iso(const PressOutput& out) {
    IsoTable f(out.labels.size());
    for (Elem v = 0; v < f.size(); ++v) f[v] = v;
    for (const auto& c : out.components) {
        if (!c.switched) continue;
        for (Elem k = 0; k < c.count; ++k) {
            f[c.first + k] = c.dup_first + k;
            f[c.dup_first + k] = c.first + k;
        }
    }
    return f;
}

LocalIso recover_iso(const PressOutput& out, std::size_t m, std::size_t n, std::size_t e) {
    for (std::size_t k : {m, n}) {
        if (k >= out.statuses.size()) throw Error("no opponent " + std::to_string(k));
        if (out.statuses[k].state != OpponentState::active)
            throw Error("opponent " + std::to_string(k) + " is " + to_string(out.statuses[k].state));
    }
    if (e >= out.components.size() || !out.components[e].tail_close)
        throw Error("tail of component " + std::to_string(e) + " not closed");
    const auto& c = out.components[e];
    const Stage T = *c.tail_close;
    auto locate = [&](std::size_t k) {
        const auto early = truncate(out.opponent_logs[k], T + 1);
        std::map<Elem, Nat> cache;
        for (Elem v = 0; v < early.size; ++v) {
            if (early.map(kR)[v] != v || root_cycle(early, v, cache) != c.y) continue;
            const Elem p = early.map(kP)[v];
            if (p == kNone || p == v || early.map(kR)[p] != p) continue;
            return v;
        }
        throw Error("opponent " + std::to_string(k) + " has no copy of the tail root");
    };
    const auto tm = truncate_all(out.opponent_logs[m]);
    const auto tn = truncate_all(out.opponent_logs[n]);
    const auto bm = birth_stages(out.opponent_logs[m]);
    const auto bn = birth_stages(out.opponent_logs[n]);
    LocalIso iso;
    std::map<Elem, Elem> fw, bw;
    std::vector<std::pair<Elem, Elem>> st{{locate(m), locate(n)}};
    while (!st.empty()) {
        auto [u, v] = st.back();
        st.pop_back();
        auto it = fw.find(u);
        if (it != fw.end()) {
            if (it->second != v) throw Error("local structures disagree");
            continue;
        }
        if (bw.count(v)) throw Error("local structures disagree");
        fw[u] = v;
        bw[v] = u;
        iso.settled = std::max({iso.settled, bm[u] + 1, bn[v] + 1});
        for (std::uint8_t f = 0; f < kSymbols; ++f) {
            const Elem a = tm.map(f)[u], b = tn.map(f)[v];
            if (a == kNone || b == kNone) throw Error("local structure not yet settled");
            st.emplace_back(a, b);
        }
    }
    iso.pairs.assign(fw.begin(), fw.end());
    return iso;
}

PressCheck check_pressing(const PressOutput& out) {
    PressCheck c;
    auto problem = [&](bool& flag, std::string what) {
        flag = false;
        if (c.problems.size() < 32) c.problems.push_back(std::move(what));
    };
    const Stage H = out.logB.stages();
    for (Stage s = 0; s < H; ++s) {
        int open = 0;
        for (const auto& k : out.components) {
            open += k.start <= s && (!k.close || *k.close > s);
            open += k.switched && *k.switched <= s && (!k.tail_close || *k.tail_close > s);
        }
        if (open != 1) problem(c.single_open, "stage " + std::to_string(s) + " has " + std::to_string(open) + " open blocks");
    }
    std::set<Nat> sizes;
    for (const auto& a : out.allocations) {
        if (!sizes.insert(a.size).second) problem(c.sizes_distinct, "size " + std::to_string(a.size) + " allocated twice");
        std::size_t existing = 0;
        for (const auto& k : out.components) existing += k.start < a.stage || (k.start == a.stage && k.e <= a.e);
        const Nat want = a.what == 'x' ? press_M(a.e + 1) : press_M(existing);
        if (a.bound != want || a.size == 0 || a.size >= a.bound)
            problem(c.bounds, "allocation of " + std::to_string(a.size) + " against bound " + std::to_string(a.bound));
    }
    for (const auto& [m, s] : out.retired)
        if (!sizes.insert(m).second) problem(c.sizes_distinct, "retired size " + std::to_string(m) + " in use");
    std::set<Elem> roots;
    for (const auto& k : out.components)
        if (k.switched) {
            ++c.switches;
            roots.insert(k.tail_root());
            roots.insert(k.tail_second());
        }
    if (out.logB.events.size() != out.logB2.events.size()) problem(c.mirror, "logs differ in length");
    for (std::size_t s = 0; s < std::min(out.logB.events.size(), out.logB2.events.size()); ++s) {
        const auto& x = out.logB.events[s];
        const auto& y = out.logB2.events[s];
        if (x.first_new != y.first_new || x.new_count != y.new_count || x.assign.size() != y.assign.size()) {
            problem(c.mirror, "stage " + std::to_string(s) + " differs in shape");
            continue;
        }
        for (std::size_t k = 0; k < x.assign.size(); ++k) {
            if (x.assign[k] == y.assign[k]) continue;
            ++c.mirror_diffs;
            if (x.assign[k].symbol != kP || y.assign[k].symbol != kP || x.assign[k].src != y.assign[k].src ||
                !roots.count(x.assign[k].src))
                problem(c.mirror, "stage " + std::to_string(s) + " differs off the tail roots");
        }
    }
    if (c.mirror_diffs != 2 * c.switches) problem(c.mirror, "expected two crossed edges per switch");
    return c;
}

std::string event_json(const PressEvent& ev) {
    nlohmann::ordered_json j;
    j["stage"] = ev.stage;
    j["event"] = kind_name(ev.kind);
    switch (ev.kind) {
        case PressEvent::Kind::pending:
            j["n"] = ev.e;
            j["level"] = ev.level;
            j["bound"] = ev.bound;
            break;
        case PressEvent::Kind::inactive:
            j["n"] = ev.e;
            j["size"] = ev.size;
            j["reason"] = ev.tag;
            break;
        case PressEvent::Kind::retire:
            j["n"] = ev.e;
            j["size"] = ev.size;
            break;
        default:
            j["e"] = ev.e;
            j["size"] = ev.size;
            if (ev.bound) j["bound"] = ev.bound;
            break;
    }
    return j.dump();
}

std::string trace_jsonl(const std::vector<PressEvent>& trace) {
    std::string s;
    for (const auto& ev : trace) {
        s += event_json(ev);
        s += '\n';
    }
    return s;
}

nlohmann::ordered_json component_table(const PressOutput& out) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& c : out.components) {
        nlohmann::ordered_json r;
        r["e"] = c.e;
        r["x"] = c.x;
        r["root"] = c.root();
        r["start"] = c.start;
        r["close"] = c.close ? nlohmann::ordered_json(*c.close) : nlohmann::ordered_json(nullptr);
        r["spines"] = c.spines;
        r["elements"] = c.count;
        r["switch"] = c.switched ? nlohmann::ordered_json(*c.switched) : nlohmann::ordered_json(nullptr);
        if (c.switched) {
            r["dup_root"] = c.dup_root();
            r["tail_root"] = c.tail_root();
            r["y"] = c.y;
            r["tail_elements"] = c.tail_count;
            r["tail_close"] = c.tail_close ? nlohmann::ordered_json(*c.tail_close) : nlohmann::ordered_json(nullptr);
        }
        rows.push_back(r);
    }
    return rows;
}

}  // namespace punctlab
