#include "punctlab/encode_d3.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

namespace punctlab {

Stage agreement_length(const Approx3& g3, Nat x, Stage s, Stage t) {
    const Nat v = g3.eval(x, s, t);
    Stage n = s;
    while (n < t && g3.eval(x, n + 1, t) == v) ++n;
    return n;
}

bool fires(const Approx3& g3, Nat x, Stage s, Stage t, FiringState& st) {
    long long l = agreement_length(g3, x, s, t);
    auto [it, fresh] = st.best.try_emplace({x, s}, -1);
    bool up = l > it->second;
    it->second = std::max(it->second, l);
    return up;
}

bool fires_least(const Approx3& g3, Nat x, Stage s, Stage t, FiringState& st) {
    bool f = fires(g3, x, s, t, st);
    for (Stage q = static_cast<Stage>(x); q < s; ++q)
        if (agreement_length(g3, x, q, t) >= s) return false;
    return f;
}

namespace {

class D3Builder {
public:
    D3Builder(const D3Config& cfg, Stage horizon)
        : g3_(cfg.g3), H_(horizon), A_(Signature({"f"})), B_(Signature({"f"})), feedA_(cfg.finite),
          feedB_(cfg.finite) {
        for (std::size_t x = 0; x < g3_.rows.size(); ++x)
            for (const auto& [s, col] : g3_.rows[x].columns)
                for (Stage t : col.mind_changes()) {
                    Nat i = pair(x, s);
                    auto [it, fresh] = least_change_.try_emplace(t, i);
                    if (!fresh) it->second = std::min(it->second, i);
                }
        best_.resize(g3_.rows.size());
    }

    BuildOutputD3 run() {
        for (Stage s = 0; s < H_; ++s) stage(s);
        out_.logA = A_.take();
        out_.logB = B_.take();
        out_.index.labelsA = std::move(labA_);
        out_.index.labelsB = std::move(labB_);
        for (Nat y = 0; g3_.s_x(y) < H_; ++y) out_.zeta_d.push_back(g3_.s_x(y));
        canonical();
        return std::move(out_);
    }

private:
    const Approx3& g3_;
    Stage H_;
    LogBuilder A_, B_;
    FiniteOrbitFeed feedA_, feedB_;
    std::vector<D3Label> labA_, labB_;
    BuildOutputD3 out_;

    std::unordered_map<Stage, Nat> least_change_;
    std::vector<std::vector<long long>> best_;  // per scripted x, index s - x

    std::vector<Elem> a_last_;
    std::vector<D3Ends> b_, d_;
    std::vector<std::uint32_t> b_next_, d_next_;
    std::vector<Elem> c_left_, c_right_;
    std::vector<Elem> d0_;

    Elem newA(D3Family f, std::uint32_t i, std::uint32_t j) {
        labA_.push_back({f, i, j});
        return A_.fresh();
    }
    Elem newB(D3Family f, std::uint32_t i, std::uint32_t j) {
        labB_.push_back({f, i, j});
        return B_.fresh();
    }

    // Extends a chain rightward, and leftward too when `left`.
    template <class New>
    void extend(D3Ends& e, std::uint32_t& next, bool left, LogBuilder& L, New fresh) {
        if (left) {
            Elem nl = fresh(next++);
            L.assign(nl, e.l);
            e.l = nl;
        }
        Elem nr = fresh(next++);
        L.assign(e.r, nr);
        e.r = nr;
    }

    std::vector<char> d_growth(Stage s) {
        std::vector<char> left(s, 0);
        const Nat X = g3_.rows.size();
        for (Nat x = 0; x < X && x < s; ++x) {
            // v[q] = g*(x, x+q, s); run ends give the agreement lengths
            const Stage n = s - static_cast<Stage>(x);
            std::vector<Nat> v(n + 1);
            for (Stage q = 0; q <= n; ++q) v[q] = g3_.eval(x, static_cast<Stage>(x) + q, s);
            std::vector<Stage> run(n + 1);
            run[n] = s;
            for (Stage q = n; q-- > 0;) run[q] = v[q] == v[q + 1] ? run[q + 1] : static_cast<Stage>(x) + q;
            auto& best = best_[x];
            best.resize(n, -1);
            Stage prefix = 0;
            bool any = false;
            for (Stage q = 0; q < n; ++q) {
                const Stage i = static_cast<Stage>(x) + q;
                const long long l = run[q];
                const bool f = l > best[q];
                best[q] = std::max(best[q], l);
                if (f && (!any || prefix < i)) {
                    left[i] = 1;
                    out_.firings.push_back({s, x, i});
                }
                prefix = any ? std::max<Stage>(prefix, run[q]) : run[q];
                any = true;
            }
        }
        // Unscripted rows are constant in t: value 1 below s_x and 0 from s_x on.
        for (Nat x = X; x < s; ++x) {
            const Stage c = g3_.s_x(x);
            if (x < c && s <= std::max<Stage>(static_cast<Stage>(x) + 1, c - 1)) left[x] = 1;
            if (c < s) left[c] = 1;
        }
        return left;
    }

    void stage(Stage s) {
        A_.begin_stage(s);
        B_.begin_stage(s);

        // Step 1
        Elem prev = kNone;
        for (Stage j = 0; j < s; ++j) {
            Elem e = newA(D3Family::a, s, j);
            if (prev != kNone) A_.assign(prev, e);
            if (j == 0) out_.index.a_anchors.push_back(e);
            prev = e;
        }
        a_last_.push_back(prev);
        for (Stage i = 0; i <= s; ++i) {
            Elem e = newA(D3Family::a, i, s);
            if (a_last_[i] != kNone) A_.assign(a_last_[i], e);
            if (i == s && s == 0) out_.index.a_anchors.push_back(e);
            a_last_[i] = e;
        }

        // Step 2
        {
            Elem e = newB(D3Family::b, s, s);
            Nat least = s;
            if (auto it = least_change_.find(s); it != least_change_.end() && it->second < s) least = it->second;
            if (least < s) out_.rebases.push_back({s, least});
            for (Stage i = 0; i < s; ++i)
                extend(b_[i], b_next_[i], i >= least, B_, [&](std::uint32_t j) { return newB(D3Family::b, i, j); });
            b_.push_back({e, e});
            b_next_.push_back(s + 1);
        }

        // Step 3
        for (Stage i = 0; i < s; ++i) {
            Elem r = newB(D3Family::c, i, 2 * s);
            Elem l = newB(D3Family::c, i, 2 * s + 1);
            B_.assign(c_right_[i], r);
            B_.assign(l, c_left_[i]);
            c_right_[i] = r;
            c_left_[i] = l;
        }
        {
            std::vector<Elem> c(2 * s + 2);
            for (Stage j = 0; j < c.size(); ++j) c[j] = newB(D3Family::c, s, j);
            B_.assign(c[1], c[0]);
            for (Stage j = 3; j < c.size(); j += 2) B_.assign(c[j], c[j - 2]);
            for (Stage j = 0; j + 2 < c.size(); j += 2) B_.assign(c[j], c[j + 2]);
            out_.index.c_anchors.push_back(c[0]);
            c_right_.push_back(c[2 * s]);
            c_left_.push_back(c[2 * s + 1]);
        }

        // Step 4
        {
            Elem e = newA(D3Family::d, s, 0);
            auto left = d_growth(s);
            for (Stage i = 0; i < s; ++i)
                extend(d_[i], d_next_[i], left[i], A_, [&](std::uint32_t j) { return newA(D3Family::d, i, j); });
            d_.push_back({e, e});
            d0_.push_back(e);
            d_next_.push_back(1);
        }

        for (auto& cyc : feedA_.step(s, A_)) labA_.resize(labA_.size() + cyc.size());
        for (auto& cyc : feedB_.step(s, B_)) labB_.resize(labB_.size() + cyc.size());

        A_.end_stage();
        B_.end_stage();
        out_.b_ends.push_back(b_);
        out_.d_ends.push_back(d_);
    }

    void canonical() {
        const auto ta = truncate_all(out_.logA);
        const auto tb = truncate_all(out_.logB);
        const auto& fa = ta.map();
        const auto& fb = tb.map();
        std::vector<Elem> pa(ta.size, kNone), pb(tb.size, kNone);
        for (Elem e = 0; e < ta.size; ++e)
            if (fa[e] != kNone) pa[fa[e]] = e;
        for (Elem e = 0; e < tb.size; ++e)
            if (fb[e] != kNone) pb[fb[e]] = e;
        auto& h = out_.canonical;
        h.assign(ta.size, kNone);
        auto walk = [&](Elem a, Elem b, const std::vector<Elem>& na, const std::vector<Elem>& nb) {
            while (a != kNone && b != kNone) {
                h[a] = b;
                a = na[a];
                b = nb[b];
            }
        };

        // One-sided chains of A in creation order onto the b-chains.
        std::vector<char> zeta(H_, 0);
        for (Stage z : out_.zeta_d) zeta[z] = 1;
        const auto& bl = out_.b_ends.back();
        const auto& dl = out_.d_ends.back();
        std::size_t k = 0;
        for (Stage s = 0; s < H_ && k < bl.size(); ++s) {
            walk(out_.index.a_anchors[s], bl[k++].l, fa, fb);
            if (!zeta[s] && k < bl.size()) walk(dl[s].l, bl[k++].l, fa, fb);
        }
        // Two-sided chains: d_{s_y} onto c_y, aligned at the base points.
        for (std::size_t y = 0; y < out_.zeta_d.size() && y < out_.index.c_anchors.size(); ++y) {
            Elem d0 = d0_[out_.zeta_d[y]];
            Elem c0 = out_.index.c_anchors[y];
            walk(d0, c0, fa, fb);
            walk(pa[d0], pb[c0], pa, pb);
        }
        // Finite cycles, enumerated identically in both logs.
        auto cyc = [](const Truncation& t, const std::vector<D3Label>& lab) {
            std::vector<std::vector<Elem>> out;
            for (auto& c : decompose(t).cycles)
                if (lab[c[0]].family == D3Family::none) out.push_back(c);
            std::sort(out.begin(), out.end(), [](const auto& p, const auto& q) { return p[0] < q[0]; });
            return out;
        };
        auto ca = cyc(ta, out_.index.labelsA);
        auto cb = cyc(tb, out_.index.labelsB);
        for (std::size_t i = 0; i < ca.size() && i < cb.size(); ++i)
            for (std::size_t p = 0; p < ca[i].size(); ++p) h[ca[i][p]] = cb[i][p];

        out_.canonical_inv.assign(tb.size, kNone);
        for (Elem a = 0; a < h.size(); ++a)
            if (h[a] != kNone) out_.canonical_inv[h[a]] = a;
    }
};

}  // namespace

BuildOutputD3 build_d3(const D3Config& cfg, Stage horizon) {
    cfg.g3.validate();
    InjSpec{1, 0, cfg.finite}.validate();
    return D3Builder(cfg, horizon).run();
}

Nat decode_d3(const ElemMap& h, const ElemMap& h_inv, const Approx3& g3, Nat x, const D3Index& index) {
    if (x >= index.c_anchors.size()) throw Error("decode_d3 needs c_{i,0} for i <= x");
    Stage s_star = 0;
    for (Nat i = 0; i <= x; ++i) {
        Elem a = h_inv(index.c_anchors[i]);
        if (a >= index.labelsA.size() || index.labelsA[a].family != D3Family::d)
            throw Error("h^-1(c_" + std::to_string(i) + ",0) is not in a two-sided candidate chain");
        s_star = std::max(s_star, index.labelsA[a].i);
    }
    const Nat K = pair(x, s_star);
    if (K >= index.a_anchors.size()) throw Error("decode_d3 needs a_{i,0} for i <= " + std::to_string(K));
    std::uint32_t top = 0, t_star = 0;
    bool any = false;
    for (Nat i = 0; i <= K; ++i) {
        Elem b = h(index.a_anchors[i]);
        if (b >= index.labelsB.size() || index.labelsB[b].family != D3Family::b)
            throw Error("h(a_" + std::to_string(i) + ",0) is not in a one-sided chain of B");
        const auto& lab = index.labelsB[b];
        if (!any || lab.i > top || (lab.i == top && lab.j > t_star)) {
            top = lab.i;
            t_star = lab.j;
            any = true;
        }
    }
    return g3.eval(x, s_star, t_star);
}

}  // namespace punctlab
