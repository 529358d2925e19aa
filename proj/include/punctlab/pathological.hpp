#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "punctlab/core.hpp"
#include "punctlab/oracles.hpp"

namespace punctlab {

// An orbit enumerated into A or into an opponent: a cycle of `size` elements.
struct OrbitRecord {
    Nat size = 0;
    Stage stage = 0;  // construction stage (always 0 for opponents)
    Stage tick = 0;   // sub-stage
};

// Orbit multiplicities per size, with the sub-stages in enumeration order.
struct Census {
    std::map<Nat, std::vector<Stage>> ticks;

    std::size_t count(Nat size) const;
    void add(Nat size, Stage tick) { ticks[size].push_back(tick); }
    // Sub-stage of the rank-th (1-based) orbit of this size, if any.
    std::optional<Stage> tick_of(Nat size, std::size_t rank) const;
};

enum class OpponentKind { copier, faker, sparse, silent };

struct OpponentSpec {
    OpponentKind kind = OpponentKind::copier;
    Stage delay = 1;     // copier, faker
    Nat fake_size = 0;   // faker: size of the extra orbit
    Stage fake_at = 1;   // faker: sub-stage at which it is revealed
};

// Opponent machine reacting to the orbits of A enumerated so far.
class Opponent {
public:
    explicit Opponent(OpponentSpec spec) : spec_(spec) {}

    void step(Stage tick, const std::vector<OrbitRecord>& a);
    const OpponentSpec& spec() const { return spec_; }
    const Census& census() const { return census_; }
    const std::vector<OrbitRecord>& orbits() const { return orbits_; }

private:
    void emit(Nat size, Stage tick);

    OpponentSpec spec_;
    Census census_;
    std::vector<OrbitRecord> orbits_;
    std::size_t copied_ = 0;
    bool faked_ = false;
};

struct PathConfig {
    std::vector<std::string> schemes;  // Psi_e for P_e
    std::vector<OpponentSpec> opponents;  // B_e for Q_e
    ClockedFn g;
    Stage wait_cap = 1u << 16;  // sub-stages spent waiting on one entry before giving up
};

// Parses {"schemes":[...],"opponents":[{"kind":"copier","delay":2},...],"g":{...},"wait_cap":N}.
PathConfig path_config_from_json(const nlohmann::json& j);

struct PathEvent {
    enum class Kind { act, kick, entry, attention };
    Kind kind = Kind::act;
    Stage t = 0;       // sub-stage
    Stage stage = 0;   // construction stage
    std::size_t e = 0; // requirement, marker or entry index
    Nat x = 0;         // entry position; act: witness size; attention: witness input
    Nat from = 0, to = 0;
    std::string tag;   // kick: n|s; entry: define|special|zero|timeout|init; attention: Q|P|diagonalized
};

struct DEntry {
    TupleValue v;
    std::size_t level = 0;
    bool special = true;  // d(s_i) placeholder rather than a defined position
    Nat size = 0;         // orbit tied to a defined position
    std::size_t rank = 0;
};

struct PathState {
    PathConfig cfg;
    std::vector<const OracleScheme*> schemes;
    std::vector<Nat> n;
    std::vector<Stage> s;
    std::vector<std::optional<Stage>> acted;  // sub-stage t_e
    std::vector<DEntry> d;
    std::vector<OrbitRecord> a_orbits;
    Census a_census;
    std::vector<Opponent> opponents;
    Stage tick = 1;

    explicit PathState(PathConfig cfg);

    std::size_t levels() const { return n.size(); }
    // d restricted to positions < bound; absent positions read as the empty tuple.
    Oracle oracle_below(Stage bound) const;
    bool opponent_inside_a(std::size_t j) const;
    // First input x < stage with g(x) converged by `stage` on which Psi_e^{d|stage} disagrees.
    std::optional<Nat> disagreement(std::size_t e, Stage stage) const;
};

enum class AttentionWhich { Q, P };

struct AttentionKind {
    AttentionWhich which = AttentionWhich::P;
    std::size_t e = 0;
};

// Q(e) when Q_e has not acted and B_e has more orbits of some size >= n_e than A. Otherwise
// P(e) when Psi_e^{d|stage} agrees with g on every tested input, or s_e was kicked past the
// stage. Levels past the scheme list always want P attention.
std::optional<AttentionKind> requires_attention(const PathState& st, std::size_t e, Stage stage);

struct PathOutput {
    StructureLog logA;
    std::vector<OrbitRecord> a_orbits;
    std::vector<std::vector<OrbitRecord>> opponent_orbits;
    std::vector<TupleValue> d;
    // x -> (stage, value) after each stage at which d(x) changed
    std::map<Nat, std::vector<std::pair<Stage, TupleValue>>> d_history;
    std::vector<PathEvent> trace;
    std::vector<Nat> n;
    std::vector<Stage> s;
    std::vector<std::optional<Stage>> acted;
    std::vector<Stage> stage_tick;  // sub-stage at the start of each stage
    std::vector<std::vector<Nat>> n_by_stage;  // markers at the end of each stage
    std::vector<std::vector<Stage>> s_by_stage;
};

PathOutput build_pathological(const PathConfig& cfg, Stage horizon);

// Maximum e-th entry of d(s_i) .. d(s_i + 2(j+1) + 1); throws Error at a missing or 0 entry.
Stage decode_q(const std::vector<TupleValue>& d, std::size_t e, Stage s_i, std::size_t j);

struct DecodeQCheck {
    Stage bound = 0;
    Nat size = 0;          // size of a_j
    std::size_t rank = 0;  // rank of a_j among the orbits of A of that size
    bool covered = false;  // B_e had that many orbits of that size by the bound
};

// Runs decode_q with s_i taken from the final markers and checks the bound against the
// opponent's orbit log; a_j is the j-th orbit of A enumerated at a stage >= s_i.
DecodeQCheck verify_decode_q(const PathOutput& out, std::size_t e, std::size_t i, std::size_t j);

std::string event_json(const PathEvent& ev);
std::string trace_jsonl(const std::vector<PathEvent>& trace);

struct TraceCheck {
    bool single_act = true;
    bool sizes_retired = true;
    bool permanence = true;
    bool markers_monotone = true;
    bool diagonalized = true;  // every scheme's last P event is a diagonalization
    std::vector<std::string> problems;

    bool pass() const { return single_act && sizes_retired && permanence && markers_monotone && diagonalized; }
};

TraceCheck check_trace(const PathOutput& out, std::size_t schemes);

}  // namespace punctlab
