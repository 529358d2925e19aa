#pragma once

#include <functional>
#include <vector>

#include "punctlab/core.hpp"
#include "punctlab/injection.hpp"
#include "punctlab/oracles.hpp"

namespace punctlab {

enum class D2Variant { omega, zeta };

struct D2Config {
    Approx2 g2;
    D2Variant variant = D2Variant::omega;
    // Orbits of the other infinite type, enumerated standardly from stage 0 in both logs.
    std::uint32_t fixed_count = 0;
    std::vector<Reveal> finite;
};

// Per stage, the endpoints and base element of every encoding chain of B.
struct ChainMarkers {
    struct Entry {
        Elem l = kNone, r = kNone, base = kNone;
    };
    std::vector<std::vector<Entry>> at;  // at[s][i] for i <= s, state at the end of stage s

    const Entry& get(std::size_t i, Stage s) const { return at.at(s).at(i); }
};

struct GlueEvent {
    Stage stage = 0;
    Nat x = 0;
};

struct BuildOutputD2 {
    StructureLog logA, logB;
    ChainMarkers markers;
    std::vector<Elem> a_anchors;             // a_{i,0}
    std::vector<std::vector<Elem>> chainsA;  // members of A's encoding chains, left to right
    std::vector<GlueEvent> glues;
    D2Variant variant = D2Variant::omega;
    // Elements of the encoding family in each log (1) versus fixed orbits and cycles (0).
    std::vector<char> familyA, familyB;
    // canonical A -> B correspondence at the horizon; kNone where undefined
    std::vector<Elem> canonical;
};

BuildOutputD2 build_d2(const D2Config& cfg, Stage horizon);

Nat decode_d2(const ElemMap& h, const Approx2& g2, Nat x, const std::vector<Elem>& a_anchors);

std::string markers_jsonl(const ChainMarkers& m);

}  // namespace punctlab
