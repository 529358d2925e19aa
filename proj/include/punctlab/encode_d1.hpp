#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "punctlab/core.hpp"
#include "punctlab/oracles.hpp"

namespace punctlab {

struct D1Config {
    ClockedFn g;
    // Size of finite orbit x; empty means x+2.
    std::vector<std::uint32_t> sizes;
    // A reveals finite orbit x at stage first + x*gap unless `reveal` lists the stages.
    Stage first = 1;
    Stage gap = 3;
    std::vector<Stage> reveal;

    std::uint32_t size(Nat x) const;
    Stage G(Nat x) const;
    void validate() const;
};

struct BuildOutputD1 {
    StructureLog logA, logB;
    std::vector<Stage> G;        // stage A enumerates orbit x, for every orbit enumerated in A
    std::vector<Stage> stageB;   // stage B enumerates orbit x, for every orbit enumerated in B
    std::vector<std::vector<Elem>> orbitsA, orbitsB;
    std::vector<Elem> chainA, chainB;
    // canonical A -> B correspondence; kNone where B has no counterpart yet
    std::vector<Elem> canonical;
};

BuildOutputD1 build_d1(const D1Config& cfg, Stage horizon);

// Closed finite orbits of a log ordered by the stage at which they close.
struct OrbitTimeline {
    explicit OrbitTimeline(const StructureLog& log);
    std::vector<std::pair<Stage, std::vector<Elem>>> cycles;
    std::size_t closed_before(Stage s) const;
};

std::pair<Nat, Stage> decode_d1(const ElemMap& h, Nat x, Stage G0, const ClockedFn& g, const OrbitTimeline& A);
// Replays A to recover orbit indices from G, and returns (g(x), G(x+1)).
std::pair<Nat, Stage> decode_d1(const ElemMap& h, Nat x, Stage G0, const ClockedFn& g, const StructureLog& logA);

}  // namespace punctlab
