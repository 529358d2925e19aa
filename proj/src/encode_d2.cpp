#include "punctlab/encode_d2.hpp"

#include <algorithm>
#include <string>

namespace punctlab {

namespace {

// Standard chain grown one element rightward per stage, and leftward too when two-sided.
struct StdChain {
    bool zeta = false;
    std::vector<Elem> left;   // leftward elements, nearest first
    std::vector<Elem> right;  // base first

    Elem base() const { return right.front(); }
    std::vector<Elem> members() const {
        std::vector<Elem> m(left.rbegin(), left.rend());
        m.insert(m.end(), right.begin(), right.end());
        return m;
    }
};

StdChain open_chain(bool zeta, LogBuilder& out) {
    StdChain c;
    c.zeta = zeta;
    c.right.push_back(out.fresh());
    return c;
}

void grow(StdChain& c, LogBuilder& out) {
    Elem e = out.fresh();
    out.assign(c.right.back(), e);
    c.right.push_back(e);
    if (c.zeta) {
        Elem l = out.fresh();
        out.assign(l, c.left.empty() ? c.base() : c.left.back());
        c.left.push_back(l);
    }
}

void mark(std::vector<char>& fam, Elem size, char v) {
    fam.resize(size, v);
}

}  // namespace

BuildOutputD2 build_d2(const D2Config& cfg, Stage horizon) {
    cfg.g2.validate();
    InjSpec{1, 0, cfg.finite}.validate();
    const bool zeta = cfg.variant == D2Variant::zeta;
    const Signature sig({"f"});
    LogBuilder A(sig), B(sig);
    BuildOutputD2 res;
    res.variant = cfg.variant;

    std::vector<StdChain> chainsA, fixedA, fixedB;
    FiniteOrbitFeed feedA(cfg.finite), feedB(cfg.finite);

    using Entry = ChainMarkers::Entry;
    std::vector<Entry> slots;
    res.markers.at.reserve(horizon);

    auto fresh_slot = [&](Entry& e) {
        Elem h = B.fresh();
        e = {h, h, h};
    };

    for (Stage s = 0; s < horizon; ++s) {
        A.begin_stage(s);
        B.begin_stage(s);

        // A: standard encoding chains, one new chain per stage.
        for (auto& c : chainsA) grow(c, A);
        chainsA.push_back(open_chain(zeta, A));
        res.a_anchors.push_back(chainsA.back().base());
        mark(res.familyA, A.size(), 1);

        // B: find the least x whose approximation changed.
        Nat x = s;
        if (s > 0)
            for (Nat y = 0; y < std::min<Nat>(s, cfg.g2.rows.size()); ++y)
                if (cfg.g2.eval(y, s) != cfg.g2.eval(y, s - 1)) {
                    x = y;
                    break;
                }
        const Elem before = B.size();
        if (x < s) {
            for (Nat j = x + 1; j < s; ++j) B.assign(slots[j - 1].r, slots[j].l);
            slots[x].r = slots[s - 1].r;
            res.glues.push_back({s, x});
            for (Nat j = x + 1; j < s; ++j) fresh_slot(slots[j]);
        }
        slots.emplace_back();
        fresh_slot(slots.back());
        for (auto& e : slots) {
            if (e.r < before && !B.assigned(0, e.r)) {
                Elem n = B.fresh();
                B.assign(e.r, n);
                e.r = n;
            }
            if (zeta) {
                Elem l = B.fresh();
                B.assign(l, e.l);
                e.l = l;
            }
        }
        mark(res.familyB, B.size(), 1);

        // Orbits of the other infinite type, identical in both logs.
        for (auto& c : fixedA) grow(c, A);
        for (auto& c : fixedB) grow(c, B);
        if (s == 0)
            for (std::uint32_t k = 0; k < cfg.fixed_count; ++k) {
                fixedA.push_back(open_chain(!zeta, A));
                fixedB.push_back(open_chain(!zeta, B));
            }
        feedA.step(s, A);
        feedB.step(s, B);
        mark(res.familyA, A.size(), 0);
        mark(res.familyB, B.size(), 0);

        A.end_stage();
        B.end_stage();
        res.markers.at.push_back(slots);
    }

    for (const auto& c : chainsA) res.chainsA.push_back(c.members());
    res.logA = A.take();
    res.logB = B.take();

    // Canonical correspondence at the horizon, offset-preserving around base points.
    const auto tb = truncate_all(res.logB);
    const auto& fb = tb.map();
    std::vector<Elem> pre(tb.size, kNone);
    for (Elem e = 0; e < tb.size; ++e)
        if (fb[e] != kNone) pre[fb[e]] = e;
    res.canonical.assign(res.logA.domain_size(), kNone);
    auto align = [&](const StdChain& a, Elem b) {
        Elem y = b;
        for (Elem e : a.right) {
            if (y == kNone) break;
            res.canonical[e] = y;
            y = fb[y];
        }
        y = pre[b];
        for (Elem e : a.left) {
            if (y == kNone) break;
            res.canonical[e] = y;
            y = pre[y];
        }
    };
    for (std::size_t i = 0; i < chainsA.size(); ++i) align(chainsA[i], slots[i].base);
    for (std::size_t k = 0; k < fixedA.size(); ++k) align(fixedA[k], fixedB[k].base());
    // Finite cycles are enumerated in the same order and at the same stages in both logs.
    auto oa = decompose(truncate_all(res.logA));
    auto ob = decompose(tb);
    std::vector<std::vector<Elem>> ca, cb;
    for (auto& c : oa.cycles)
        if (!res.familyA[c[0]]) ca.push_back(c);
    for (auto& c : ob.cycles)
        if (!res.familyB[c[0]]) cb.push_back(c);
    auto by_first = [](const auto& p, const auto& q) { return p[0] < q[0]; };
    std::sort(ca.begin(), ca.end(), by_first);
    std::sort(cb.begin(), cb.end(), by_first);
    for (std::size_t k = 0; k < ca.size() && k < cb.size(); ++k)
        for (std::size_t p = 0; p < ca[k].size(); ++p) res.canonical[ca[k][p]] = cb[k][p];
    return res;
}

Nat decode_d2(const ElemMap& h, const Approx2& g2, Nat x, const std::vector<Elem>& a_anchors) {
    if (x + 2 > a_anchors.size()) throw Error("decode_d2 needs anchors a_{0,0}..a_{x+1,0}");
    Elem m = 0;
    for (Nat i = 0; i <= x + 1; ++i) m = std::max(m, h(a_anchors[i]));
    return g2.eval(x, m);
}

std::string markers_jsonl(const ChainMarkers& m) {
    std::string out;
    for (std::size_t s = 0; s < m.at.size(); ++s) {
        out += "{\"stage\":" + std::to_string(s) + ",\"chains\":[";
        for (std::size_t i = 0; i < m.at[s].size(); ++i) {
            const auto& e = m.at[s][i];
            if (i) out += ',';
            out += "[" + std::to_string(e.l) + "," + std::to_string(e.r) + "," + std::to_string(e.base) + "]";
        }
        out += "]}\n";
    }
    return out;
}

}  // namespace punctlab
