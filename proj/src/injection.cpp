#include "punctlab/injection.hpp"

#include <algorithm>
#include <string>

namespace punctlab {

NotInjective::NotInjective(Elem a, Elem b, Elem t)
    : Error("not injective: " + std::to_string(a) + " and " + std::to_string(b) + " both map to " +
            std::to_string(t)),
      first(a), second(b), target(t) {}

OrbitDecomp decompose(const Truncation& t, std::size_t symbol) {
    const auto& f = t.map(symbol);
    const Elem n = t.size;
    std::vector<Elem> pre(n, kNone);
    for (Elem e = 0; e < n; ++e) {
        Elem y = f[e];
        if (y == kNone) continue;
        if (y >= n) throw Error("map leaves the truncation at " + std::to_string(e));
        if (pre[y] != kNone) throw NotInjective(pre[y], e, y);
        pre[y] = e;
    }
    OrbitDecomp d;
    std::vector<char> seen(n, 0);
    for (Elem e = 0; e < n; ++e) {
        if (pre[e] != kNone) continue;
        std::vector<Elem> seg;
        for (Elem x = e; x != kNone; x = f[x]) {
            seen[x] = 1;
            seg.push_back(x);
        }
        d.segments.push_back(std::move(seg));
    }
    for (Elem e = 0; e < n; ++e) {
        if (seen[e]) continue;
        std::vector<Elem> cyc;
        for (Elem x = e; !seen[x]; x = f[x]) {
            seen[x] = 1;
            cyc.push_back(x);
        }
        d.cycles.push_back(std::move(cyc));
    }
    return d;
}

Character character(const OrbitDecomp& d) {
    Character c;
    for (const auto& cy : d.cycles) c.cycle_sizes.push_back(cy.size());
    for (const auto& sg : d.segments) c.segment_lengths.push_back(sg.size());
    std::sort(c.cycle_sizes.begin(), c.cycle_sizes.end());
    std::sort(c.segment_lengths.begin(), c.segment_lengths.end());
    return c;
}

OrbitIndex::OrbitIndex(const OrbitDecomp& d, Elem domain) : orbit_of(domain, 0), pos_of(domain, 0) {
    auto add = [&](const std::vector<Elem>& m, bool cyc) {
        auto id = static_cast<std::uint32_t>(orbits.size());
        for (std::uint32_t p = 0; p < m.size(); ++p) {
            orbit_of[m[p]] = id;
            pos_of[m[p]] = p;
        }
        orbits.push_back({cyc, m});
    };
    for (const auto& c : d.cycles) add(c, true);
    for (const auto& s : d.segments) add(s, false);
}

OrbitIndex::OrbitIndex(const Truncation& t, std::size_t symbol) : OrbitIndex(decompose(t, symbol), t.size) {}

void InjSpec::validate() const {
    if (N0 == 0 && N1 == 0) throw ConfigError("punctualize needs at least one infinite orbit (N0+N1 >= 1)");
    for (std::size_t i = 0; i < finite.size(); ++i) {
        if (finite[i].size == 0) throw ConfigError("finite orbit sizes must be positive");
        if (i > 0 && finite[i].stage <= finite[i - 1].stage)
            throw ConfigError("finite orbit reveal stages must be strictly increasing");
    }
}

std::vector<std::vector<Elem>> FiniteOrbitFeed::step(Stage s, LogBuilder& out) {
    std::vector<std::vector<Elem>> made;
    while (next_ < schedule_.size() && schedule_[next_].stage <= s) {
        std::vector<Elem> cyc(schedule_[next_].size);
        for (auto& e : cyc) e = out.fresh();
        for (std::size_t i = 0; i < cyc.size(); ++i) out.assign(cyc[i], cyc[(i + 1) % cyc.size()]);
        made.push_back(std::move(cyc));
        ++next_;
    }
    return made;
}

namespace {

class Punctualizer : public StageMachine {
public:
    Punctualizer(const InjSpec& spec, Stage horizon)
        : StageMachine(Signature({"f"}), horizon), spec_(spec), feed_(spec.finite) {}

    std::vector<PunctualizeOutput::Chain> chains;
    std::vector<std::vector<Elem>> cycles;

protected:
    void step(Stage s, LogBuilder& out) override {
        for (auto& ch : chains) {
            Elem tail = ch.members.back();
            Elem e = out.fresh();
            out.assign(tail, e);
            ch.members.push_back(e);
            if (ch.zeta && s % 2 == 0) {
                Elem l = out.fresh();
                out.assign(l, ch.members.front());
                ch.members.insert(ch.members.begin(), l);
            }
        }
        if (omega_ < spec_.N0) {
            chains.push_back({false, s, {out.fresh()}});
            ++omega_;
        }
        if (zeta_ < spec_.N1) {
            chains.push_back({true, s, {out.fresh()}});
            ++zeta_;
        }
        for (auto& c : feed_.step(s, out)) cycles.push_back(std::move(c));
    }

private:
    InjSpec spec_;
    FiniteOrbitFeed feed_;
    Count omega_ = 0, zeta_ = 0;
};

}  // namespace

PunctualizeOutput punctualize(const InjSpec& spec, Stage horizon) {
    spec.validate();
    Punctualizer m(spec, horizon);
    run_to_horizon(m);
    PunctualizeOutput out;
    out.chains = std::move(m.chains);
    out.cycles = std::move(m.cycles);
    out.log = m.take();
    return out;
}

namespace {

struct Matcher {
    const OrbitIndex& a;
    const OrbitIndex& b;
    const std::vector<Elem>& anchors;
    const MatchOptions& opt;
    MatchResult res;
    std::vector<Elem> cur;
    // a-orbit -> (b-orbit, shift); shift is added to a positions
    std::vector<std::pair<std::uint32_t, long long>> bound;
    std::vector<char> used_b;

    Matcher(const OrbitIndex& a_, const OrbitIndex& b_, const std::vector<Elem>& an, const MatchOptions& o)
        : a(a_), b(b_), anchors(an), opt(o), bound(a_.orbits.size(), {kNone, 0}),
          used_b(b_.orbits.size(), 0) {}

    bool image_of(std::uint32_t ob, long long pos, Elem& out) const {
        const auto& orb = b.orbits[ob];
        long long n = static_cast<long long>(orb.members.size());
        if (orb.cycle) pos = ((pos % n) + n) % n;
        if (pos < 0 || pos >= n) return false;
        out = orb.members[static_cast<std::size_t>(pos)];
        return true;
    }

    bool place(std::size_t k, std::uint32_t oa, std::uint32_t ob, long long shift) {
        Elem img;
        if (!image_of(ob, static_cast<long long>(a.pos_of[anchors[k]]) + shift, img)) return false;
        if (opt.admissible && !opt.admissible(k, img)) return false;
        // Orbit-consistency of earlier anchors sharing this a-orbit was fixed by `bound`.
        for (std::size_t i = 0; i < k; ++i)
            if (cur[i] == img) return false;
        cur.push_back(img);
        bool fresh = bound[oa].first == kNone;
        if (fresh) {
            bound[oa] = {ob, shift};
            used_b[ob] = 1;
        }
        rec(k + 1);
        if (fresh) {
            bound[oa] = {kNone, 0};
            used_b[ob] = 0;
        }
        cur.pop_back();
        return true;
    }

    void rec(std::size_t k) {
        if (res.truncated) return;
        if (k == anchors.size()) {
            if (res.maps.size() >= opt.limit) {
                res.truncated = true;
                return;
            }
            res.maps.push_back(cur);
            return;
        }
        const Elem e = anchors[k];
        const std::uint32_t oa = a.orbit_of[e];
        const auto& orbA = a.orbits[oa];
        if (bound[oa].first != kNone) {
            place(k, oa, bound[oa].first, bound[oa].second);
            return;
        }
        const long long p = a.pos_of[e];
        for (std::uint32_t ob = 0; ob < b.orbits.size(); ++ob) {
            if (used_b[ob]) continue;
            const auto& orbB = b.orbits[ob];
            if (orbB.cycle != orbA.cycle) continue;
            if (orbA.cycle) {
                if (orbB.members.size() != orbA.members.size()) continue;
                for (long long r = 0; r < static_cast<long long>(orbB.members.size()); ++r) place(k, oa, ob, r);
            } else if (!opt.free_segments) {
                place(k, oa, ob, 0);
            } else {
                for (long long q = 0; q < static_cast<long long>(orbB.members.size()); ++q) place(k, oa, ob, q - p);
            }
            if (res.truncated) return;
        }
    }
};

}  // namespace

MatchResult match_candidates(const OrbitIndex& a, const OrbitIndex& b, const std::vector<Elem>& anchors,
                             const MatchOptions& opt) {
    if (anchors.size() > 12) throw ConfigError("match_candidates supports at most 12 anchors");
    for (Elem e : anchors)
        if (e >= a.orbit_of.size()) throw ConfigError("anchor outside the truncation");
    Matcher m(a, b, anchors, opt);
    m.rec(0);
    return std::move(m.res);
}

MatchResult match_candidates(const Truncation& a, const Truncation& b, const std::vector<Elem>& anchors,
                             const MatchOptions& opt) {
    if (a.size > 20000 || b.size > 20000) throw ConfigError("match_candidates supports truncations up to 20000");
    return match_candidates(OrbitIndex(a), OrbitIndex(b), anchors, opt);
}

std::vector<Elem> extend_candidate(const OrbitIndex& a, const OrbitIndex& b, const std::vector<Elem>& anchors,
                                   const std::vector<Elem>& images, const std::vector<Elem>& fallback) {
    std::vector<Elem> out = fallback;
    out.resize(a.orbit_of.size(), kNone);
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        const auto& oa = a.orbits[a.orbit_of[anchors[k]]];
        const auto& ob = b.orbits[b.orbit_of[images[k]]];
        long long shift = static_cast<long long>(b.pos_of[images[k]]) - a.pos_of[anchors[k]];
        long long n = static_cast<long long>(ob.members.size());
        for (std::size_t p = 0; p < oa.members.size(); ++p) {
            long long q = static_cast<long long>(p) + shift;
            if (ob.cycle) q = ((q % n) + n) % n;
            out[oa.members[p]] = (q >= 0 && q < n) ? ob.members[static_cast<std::size_t>(q)] : kNone;
        }
    }
    return out;
}

}  // namespace punctlab
