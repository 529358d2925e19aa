#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "punctlab/core.hpp"
#include "punctlab/oracles.hpp"

namespace punctlab {

// Punctual structure on the domain of naturals with one unary function.
struct UnaryStructure {
    std::string name;
    std::function<Nat(Nat)> f;
};

// succ, pairs (x xor 1), loops (identity), triples (3-cycles).
const UnaryStructure& structure_by_name(const std::string& name);
std::vector<std::string> structure_names();

// R_{i,j,m,n}: Psi_i : A_m -> A_n and Psi_j : A_n -> A_m.
struct Requirement {
    std::string psi_i, psi_j;
    std::string a_m, a_n;
};

struct PermitConfig {
    CeSchedule W;
    std::vector<Requirement> catalog;
};

// Parses {"W":[[x,stage],...],"requirements":[{"psi_i":..,"psi_j":..,"a_m":..,"a_n":..}]}.
PermitConfig permit_config_from_json(const nlohmann::json& j);

enum class ErrorKind { composition, injectivity, homomorphism, budget };
std::string to_string(ErrorKind k);

struct ErrorWitness {
    std::size_t e = 0;
    std::size_t marker = 0;  // x with p_e pointing at m_x
    Nat p = 0;               // value of m_x when found
    Stage stage = 0;
    Nat input = 0;
    Nat use = 0;  // largest oracle position read by the failing check
    ErrorKind kind = ErrorKind::composition;
};

// f* = (f|p) followed by 1s.
Oracle star_oracle(const std::vector<std::uint8_t>& f, Nat p, Nat* use);

// Checks injectivity, composition and signature preservation at one input, in that order.
std::optional<ErrorKind> check_input(const Requirement& r, const Oracle& oracle, Nat x,
                                     std::map<Nat, Nat>& img_i, std::map<Nat, Nat>& img_j);

struct PermitState {
    PermitConfig cfg;
    Stage stage = 0;
    std::vector<std::uint8_t> f;  // positions past the end read 0
    std::vector<Nat> m;           // markers, eagerly kept up to a fixed length
    std::vector<std::size_t> pointer;  // e -> marker index
    std::vector<bool> satisfied;
    std::vector<std::map<Nat, Nat>> g;  // e -> partial g_e
    std::vector<std::map<std::size_t, ErrorWitness>> errors;  // e -> x -> error found at m_x
    std::vector<std::optional<ErrorWitness>> acted_on;  // witness preserved by the last act

    PermitState(PermitConfig cfg, std::size_t marker_count);

    std::uint8_t fval(Nat y) const { return y < f.size() ? f[y] : 0; }
    Nat p(std::size_t e) const { return m.at(pointer[e]); }
};

// Fresh search for R_e over inputs 0 .. budget-1 with f* at the current pointer.
std::optional<ErrorWitness> find_error(const PermitState& st, std::size_t e, Nat budget);

struct FChange {
    Stage stage = 0;
    Nat y = 0;
    std::uint8_t from = 0, to = 0;
};

struct PermitEvent {
    enum class Kind { error, pointer, init, act, refresh, fset, injure };
    Kind kind = Kind::error;
    Stage stage = 0;
    std::size_t e = 0;   // requirement (refresh: least marker moved)
    Nat x = 0;           // marker index; fset: position
    Nat from = 0, to = 0;
    std::string tag;     // error: kind; init: cause index; fset: act|enter|marker
};

struct PermitOutput {
    std::vector<std::uint8_t> f;
    std::vector<Nat> m;
    std::vector<std::pair<Stage, std::vector<Nat>>> marker_history;  // markers after each stage that moved them
    std::vector<FChange> f_changes;
    std::vector<std::vector<std::size_t>> pointers_by_stage;  // after each stage
    std::vector<bool> satisfied;
    std::vector<std::map<Nat, Nat>> g;
    std::vector<std::map<std::size_t, ErrorWitness>> errors;
    std::vector<std::optional<ErrorWitness>> acted_on;
    std::vector<PermitEvent> trace;
    Stage horizon = 0;

    std::uint8_t fval(Nat y) const { return y < f.size() ? f[y] : 0; }
    // m_x[s+1]: the marker after stage s.
    Nat marker_after(std::size_t x, Stage s) const;
    // f(y)[s+1]: the value after stage s.
    std::uint8_t f_after(Nat y, Stage s) const;
};

PermitOutput build_low(const PermitConfig& cfg, Stage horizon);

struct EquivReport {
    bool conclusive = true;
    std::vector<Nat> w_mismatch;  // x whose W(x) recovered from f differs
    std::vector<Nat> m_mismatch;  // x whose recovered marker differs from the final one
    std::vector<Nat> f_mismatch;  // y whose f(y) recovered from W differs
    std::vector<std::uint8_t> w_recovered;

    bool pass() const { return conclusive && w_mismatch.empty() && m_mismatch.empty() && f_mismatch.empty(); }
};

// Both reductions for x < xs and y < ys.
EquivReport verify_equiv(const PermitOutput& out, const CeSchedule& W, std::size_t xs, Nat ys);

std::string event_json(const PermitEvent& ev);
std::string trace_jsonl(const std::vector<PermitEvent>& trace);
nlohmann::ordered_json permit_report(const PermitOutput& out, std::size_t xs);

}  // namespace punctlab
