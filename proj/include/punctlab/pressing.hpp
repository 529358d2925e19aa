#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "punctlab/core.hpp"
#include "punctlab/oracles.hpp"

namespace punctlab {

// Symbols of the pressing signature.
constexpr std::uint8_t kS = 0, kP = 1, kR = 2, kC = 3;
Signature pressing_signature();

// M_e = 4e.
Nat press_M(std::size_t e);

enum class PressFamily : std::uint8_t { b, d, t };

struct PressLabel {
    PressFamily family = PressFamily::b;
    std::uint32_t e = 0, i = 0, j = 0;
};

// Component e with its duplicate and tail. Each block occupies a contiguous element range.
struct ComponentRecord {
    std::size_t e = 0;
    Nat x = 0;
    Stage start = 0;
    std::optional<Stage> close;
    Elem first = 0;
    Elem count = 0;
    std::uint32_t spines = 0;
    std::optional<Stage> switched;
    Nat y = 0;
    Elem dup_first = 0;
    Elem tail_first = 0;
    Elem tail_count = 0;
    std::optional<Stage> tail_close;

    Elem root() const { return first; }
    Elem dup_root() const { return dup_first; }
    Elem tail_root() const { return tail_first; }
    Elem tail_second() const { return tail_first + static_cast<Elem>(y); }
};

struct Allocation {
    Nat size = 0;
    Nat bound = 0;
    char what = 'x';  // x: component, y: tail
    std::size_t e = 0;
    Stage stage = 0;
};

enum class PressOpponentKind { copier, faker, pender, points };

struct PressOpponentSpec {
    PressOpponentKind kind = PressOpponentKind::copier;
    Stage delay = 1;
    bool mirror = false;  // copy B' instead of B
    Nat size = 0;         // faker: closed cycle size; pender: size at which the chain closes (0 = never)
    Stage at = 1;
};

struct PressConfig {
    CeSchedule W;
    std::vector<ClockedFn> catalog;  // p_0, p_1, ...; missing entries converge at stage 0
    std::vector<PressOpponentSpec> opponents;
};

// Parses {"W":[[x,s],...],"catalog":[{"values":..,"conv":..}],"opponents":[{"kind":"copier","delay":1,"mirror":true}]}.
PressConfig press_config_from_json(const nlohmann::json& j);

// g(<0,x>) = stage x enters W or -1; g(<k+1,x>) = stage p_k(x) converges.
struct GTable {
    CeSchedule W;
    std::vector<ClockedFn> catalog;

    std::int64_t operator()(Nat z) const;
};

enum class OpponentState { active, pending, inactive };
std::string to_string(OpponentState s);

struct OpponentStatus {
    OpponentState state = OpponentState::active;
    Elem witness = 0;        // pending: the element b
    std::size_t level = 0;   // pending: b was first an e-witness at this e
    std::string reason;      // inactive: new-size | multiplicity
    Nat size = 0;            // inactive: the offending size
};

// What the sizes of B allow an opponent to show.
struct SizeBook {
    std::set<Nat> used;
    std::set<Nat> retired;
    std::map<Nat, std::size_t> max_count;  // closed blocks: the most elements B will ever have of that size
};

// Incremental classification of one opponent: least 0<m<=bound with C^m R(b) = R(b), per element.
class OpponentTracker {
public:
    // Scans the opponent's current log. Sizes it retires are appended to `retire`.
    const OpponentStatus& update(const LogBuilder& opp, Nat bound, std::size_t level, const SizeBook& book,
                                 std::vector<Nat>& retire);

    const OpponentStatus& status() const { return status_; }
    std::size_t count(Nat size) const;
    // Pending with a witness whose root cycle is known not to close up to `bound`.
    bool witness_at(Nat bound) const;

private:
    struct RootScan {
        Nat explored = 0;
        Nat closed = 0;
        Elem cur = 0;
    };

    RootScan& explore(const LogBuilder& opp, Elem r, Nat bound);
    void resolve(Nat m, const SizeBook& book, std::vector<Nat>& retire);
    void deactivate(std::string reason, Nat size);

    OpponentStatus status_;
    Elem wroot_ = 0;
    Elem scanned_ = 0;
    std::vector<Elem> unresolved_;
    std::map<Elem, RootScan> roots_;
    std::map<Nat, std::size_t> counts_;
};

struct PressEvent {
    enum class Kind { start, extend, close, switch_, tail_extend, tail_close, pending, inactive, retire };
    Kind kind = Kind::start;
    Stage stage = 0;
    std::size_t e = 0;  // component; pending/inactive: opponent
    Nat size = 0;
    Nat bound = 0;
    std::size_t level = 0;
    std::string tag;
};

struct OpenBlock {
    char kind = 'c';  // c: component, t: tail
    std::size_t e = 0;
};

struct PressOutput {
    StructureLog logB, logB2;
    std::vector<PressLabel> labels;
    std::vector<ComponentRecord> components;
    std::vector<Allocation> allocations;
    std::vector<std::pair<Nat, Stage>> retired;
    std::vector<StructureLog> opponent_logs;
    std::vector<OpponentStatus> statuses;
    std::vector<PressEvent> trace;
    std::vector<OpenBlock> open_by_stage;  // open block at the end of each stage
};

PressOutput build_pressing(const PressConfig& cfg, Stage horizon);

// Bijection between the closed parts of two {S,P,R,C} truncations; kNone outside.
using IsoTable = std::vector<Elem>;

// Elements all of whose images are defined and again in the set (greatest such set).
std::vector<bool> closed_part(const Truncation& t);

// Every isomorphism between the closed parts, up to `limit`.
std::vector<IsoTable> brute_force_isos(const Truncation& a, const Truncation& b, std::size_t limit = 16);

// g(z) from an isomorphism f : B -> B'; throws Error where f breaks tail rigidity or the
// components needed are not yet switched.
std::int64_t decode_g(const PressOutput& out, const ElemMap& f, const ElemMap& f_inv, Nat z, const GTable& g);

// f with f(b) = d' and f(d) = b' on switched components, identity elsewhere.
IsoTable canonical_press_iso(const PressOutput& out);

struct LocalIso {
    std::vector<std::pair<Elem, Elem>> pairs;  // element of B_m, element of B_n
    Stage settled = 0;  // stages after which both opponents hold the whole local structure
};

// Isomorphism between the e-th local structures (component, duplicate, tail) of B_m and B_n,
// grown from the copies of the tail root found at the tail's closing stage.
LocalIso recover_iso(const PressOutput& out, std::size_t m, std::size_t n, std::size_t e);

struct PressCheck {
    bool single_open = true;
    bool sizes_distinct = true;
    bool bounds = true;
    bool mirror = true;
    std::size_t mirror_diffs = 0;
    std::size_t switches = 0;
    std::vector<std::string> problems;

    bool pass() const { return single_open && sizes_distinct && bounds && mirror; }
};

PressCheck check_pressing(const PressOutput& out);

std::string event_json(const PressEvent& ev);
std::string trace_jsonl(const std::vector<PressEvent>& trace);
nlohmann::ordered_json component_table(const PressOutput& out);

}  // namespace punctlab
