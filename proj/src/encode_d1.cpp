#include "punctlab/encode_d1.hpp"

#include <algorithm>

#include "punctlab/injection.hpp"

namespace punctlab {

std::uint32_t D1Config::size(Nat x) const {
    if (sizes.empty()) return static_cast<std::uint32_t>(x + 2);
    if (x >= sizes.size()) throw ConfigError("d1: no size for finite orbit " + std::to_string(x));
    return sizes[x];
}

Stage D1Config::G(Nat x) const {
    if (!reveal.empty()) {
        if (x >= reveal.size()) return std::numeric_limits<Stage>::max();
        return reveal[x];
    }
    return static_cast<Stage>(first + x * gap);
}

void D1Config::validate() const {
    g.validate();
    if (reveal.empty() && gap == 0) throw ConfigError("d1: gap must be positive");
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] <= sizes[i - 1]) throw ConfigError("d1: sizes must be strictly increasing");
    if (!sizes.empty() && sizes[0] == 0) throw ConfigError("d1: sizes must be positive");
    for (std::size_t i = 1; i < reveal.size(); ++i)
        if (reveal[i] <= reveal[i - 1]) throw ConfigError("d1: reveal stages must be strictly increasing");
}

namespace {

std::vector<Elem> make_cycle(LogBuilder& out, std::uint32_t k) {
    std::vector<Elem> cyc(k);
    for (auto& e : cyc) e = out.fresh();
    for (std::uint32_t i = 0; i < k; ++i) out.assign(cyc[i], cyc[(i + 1) % k]);
    return cyc;
}

}  // namespace

BuildOutputD1 build_d1(const D1Config& cfg, Stage horizon) {
    cfg.validate();
    if (cfg.G(0) >= horizon) throw ConfigError("d1: horizon too small to reveal finite orbit 0");
    Signature sig({"f"});
    LogBuilder A(sig), B(sig);
    BuildOutputD1 out;
    for (Stage s = 0; s < horizon; ++s) {
        A.begin_stage(s);
        B.begin_stage(s);
        for (auto* side : {&A, &B}) {
            auto& chain = side == &A ? out.chainA : out.chainB;
            Elem e = side->fresh();
            if (!chain.empty()) side->assign(chain.back(), e);
            chain.push_back(e);
        }
        Nat x = out.orbitsA.size();
        if (cfg.G(x) == s) {
            out.orbitsA.push_back(make_cycle(A, cfg.size(x)));
            out.G.push_back(s);
        } else if (cfg.G(x) < s) {
            throw ConfigError("d1: reveal stages must be strictly increasing");
        }
        // B's orbit y waits for g(y) to converge and for A's orbit y+1.
        for (;;) {
            Nat y = out.orbitsB.size();
            if (y + 1 >= out.orbitsA.size() || cfg.g.convergence(y) > s) break;
            out.orbitsB.push_back(make_cycle(B, cfg.size(y)));
            out.stageB.push_back(s);
        }
        A.end_stage();
        B.end_stage();
    }
    out.logA = A.take();
    out.logB = B.take();
    out.canonical.assign(out.logA.domain_size(), kNone);
    for (std::size_t p = 0; p < out.chainA.size(); ++p) out.canonical[out.chainA[p]] = out.chainB[p];
    for (std::size_t x = 0; x < out.orbitsB.size(); ++x)
        for (std::size_t k = 0; k < out.orbitsA[x].size(); ++k) out.canonical[out.orbitsA[x][k]] = out.orbitsB[x][k];
    return out;
}

OrbitTimeline::OrbitTimeline(const StructureLog& log) {
    auto d = decompose(truncate_all(log));
    std::vector<Stage> closed(log.domain_size(), 0);
    for (const auto& ev : log.events)
        for (const auto& a : ev.assign) closed[a.src] = ev.stage;
    for (auto& c : d.cycles) {
        Stage st = 0;
        for (Elem e : c) st = std::max(st, closed[e]);
        cycles.emplace_back(st, std::move(c));
    }
    std::sort(cycles.begin(), cycles.end());
}

std::size_t OrbitTimeline::closed_before(Stage s) const {
    return static_cast<std::size_t>(
        std::lower_bound(cycles.begin(), cycles.end(), s, [](const auto& c, Stage v) { return c.first < v; }) -
        cycles.begin());
}

std::pair<Nat, Stage> decode_d1(const ElemMap& h, Nat x, Stage G0, const ClockedFn& g, const OrbitTimeline& A) {
    Stage Gi = G0;
    Nat bound = 0;
    for (Nat i = 0;; ++i) {
        if (A.closed_before(Gi + 1) <= i || A.cycles[i].first != Gi)
            throw Error("decode_d1: no finite orbit revealed at stage " + std::to_string(Gi));
        for (Elem a : A.cycles[i].second) bound = std::max<Nat>(bound, h(a));
        // indices bound stages: anything enumerated by stage `bound` is visible here
        Stage b = static_cast<Stage>(std::min<Nat>(bound, std::numeric_limits<Stage>::max() - 1));
        auto gi = eval_clocked(g, i, b);
        if (A.closed_before(b + 1) <= i + 1 || !gi)
            throw Error("decode_d1: image bound " + std::to_string(bound) + " is below the required stage");
        Gi = A.cycles[i + 1].first;
        if (i == x) return {*gi, Gi};
    }
}

std::pair<Nat, Stage> decode_d1(const ElemMap& h, Nat x, Stage G0, const ClockedFn& g, const StructureLog& logA) {
    return decode_d1(h, x, G0, g, OrbitTimeline(logA));
}

}  // namespace punctlab
