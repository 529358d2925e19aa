#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "punctlab/core.hpp"
#include "punctlab/injection.hpp"
#include "punctlab/oracles.hpp"

namespace punctlab {

enum class D3Family : std::uint8_t { none, a, b, c, d };

struct D3Label {
    D3Family family = D3Family::none;
    std::uint32_t i = 0, j = 0;
};

// Historical maxima of the agreement length, per (x,s).
struct FiringState {
    std::map<std::pair<Nat, Stage>, long long> best;
};

// Largest n <= t with g*(x,s,t) = g*(x,s',t) for every s' in [s,n].
Stage agreement_length(const Approx3& g3, Nat x, Stage s, Stage t);

// True iff the agreement length at stage t exceeds every earlier value; updates the state.
bool fires(const Approx3& g3, Nat x, Stage s, Stage t, FiringState& st);

// fires, restricted to the least candidate: also requires every s'' in [x,s) to have
// agreement length below s at stage t. Only (x, s_x) satisfies this infinitely often.
bool fires_least(const Approx3& g3, Nat x, Stage s, Stage t, FiringState& st);

struct D3Config {
    Approx3 g3;
    std::vector<Reveal> finite;
};

struct D3Ends {
    Elem l = kNone, r = kNone;
};

struct FireEvent {
    Stage stage = 0;
    Nat x = 0;
    Stage s = 0;
};

// What the decoder needs besides the isomorphism.
struct D3Index {
    std::vector<Elem> a_anchors;  // a_{i,0}
    std::vector<Elem> c_anchors;  // c_{i,0}
    std::vector<D3Label> labelsA, labelsB;
};

struct BuildOutputD3 {
    StructureLog logA, logB;
    D3Index index;
    // end of stage s, chain i <= s
    std::vector<std::vector<D3Ends>> b_ends, d_ends;
    // stages of Step 2 rebasing together with the least changed pair index
    std::vector<std::pair<Stage, Nat>> rebases;
    // refined firings of scripted rows, in stage order
    std::vector<FireEvent> firings;
    // d-chains that are two-sided in the limit, i.e. the s_y below the horizon
    std::vector<Stage> zeta_d;
    std::vector<Elem> canonical, canonical_inv;
};

BuildOutputD3 build_d3(const D3Config& cfg, Stage horizon);

// Throws Error when an image lies outside the family the isomorphism must respect.
Nat decode_d3(const ElemMap& h, const ElemMap& h_inv, const Approx3& g3, Nat x, const D3Index& index);

}  // namespace punctlab
