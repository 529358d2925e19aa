#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "punctlab/core.hpp"

namespace punctlab {

class NotInjective : public Error {
public:
    NotInjective(Elem a, Elem b, Elem target);
    Elem first, second, target;
};

struct OrbitDecomp {
    // Each cycle lists its members starting from the least one, in f order.
    std::vector<std::vector<Elem>> cycles;
    // Each segment lists its members from head to tail.
    std::vector<std::vector<Elem>> segments;
};

OrbitDecomp decompose(const Truncation& t, std::size_t symbol = 0);

struct Character {
    std::vector<std::size_t> cycle_sizes;      // sorted
    std::vector<std::size_t> segment_lengths;  // sorted

    bool operator==(const Character&) const = default;
};

Character character(const OrbitDecomp& d);

// Position of every element inside its orbit, for fast lookup.
struct OrbitIndex {
    struct Orbit {
        bool cycle = false;
        std::vector<Elem> members;
    };
    std::vector<Orbit> orbits;
    std::vector<std::uint32_t> orbit_of;  // per element
    std::vector<std::uint32_t> pos_of;    // per element

    explicit OrbitIndex(const OrbitDecomp& d, Elem domain);
    OrbitIndex(const Truncation& t, std::size_t symbol = 0);
};

using Count = std::uint64_t;
constexpr Count kInfinite = std::numeric_limits<Count>::max();

struct Reveal {
    std::uint32_t size = 0;
    Stage stage = 0;
};

struct InjSpec {
    Count N0 = 0;
    Count N1 = 0;
    std::vector<Reveal> finite;

    void validate() const;
};

// Enumerates the finite orbits of a reveal schedule; used by every builder that
// copies finite orbits from an InjSpec.
class FiniteOrbitFeed {
public:
    explicit FiniteOrbitFeed(std::vector<Reveal> schedule) : schedule_(std::move(schedule)) {}
    // Enumerates every cycle due by stage s; returns the member lists.
    std::vector<std::vector<Elem>> step(Stage s, LogBuilder& out);

private:
    std::vector<Reveal> schedule_;
    std::size_t next_ = 0;
};

struct PunctualizeOutput {
    StructureLog log;
    // Chain membership metadata: for each chain, whether it is a zeta chain and its members
    // ordered by position (leftmost first).
    struct Chain {
        bool zeta = false;
        Stage start = 0;
        std::vector<Elem> members;
    };
    std::vector<Chain> chains;
    std::vector<std::vector<Elem>> cycles;
};

// Stage s extends every existing chain by one element (zeta chains also grow leftward on
// even stages) and opens one further chain of each type while fewer than N_i exist.
PunctualizeOutput punctualize(const InjSpec& spec, Stage horizon);

struct MatchOptions {
    // Segment anchors may land at any position with the same relative offsets.
    bool free_segments = false;
    std::size_t limit = 1000000;
    // Optional filter on the image chosen for an anchor (receives the anchor's index).
    std::function<bool(std::size_t, Elem)> admissible;
};

struct MatchResult {
    std::vector<std::vector<Elem>> maps;  // images of the anchors, in anchor order
    bool truncated = false;
};

// Every injective map on the anchors extending to an orbit-respecting correspondence.
MatchResult match_candidates(const Truncation& a, const Truncation& b, const std::vector<Elem>& anchors,
                             const MatchOptions& opt = {});
MatchResult match_candidates(const OrbitIndex& a, const OrbitIndex& b, const std::vector<Elem>& anchors,
                             const MatchOptions& opt = {});

// Full table extending one candidate: every element of an anchor's orbit follows the anchor's
// offset; all other elements take their `fallback` image.
std::vector<Elem> extend_candidate(const OrbitIndex& a, const OrbitIndex& b, const std::vector<Elem>& anchors,
                                   const std::vector<Elem>& images, const std::vector<Elem>& fallback);

}  // namespace punctlab
