#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace punctlab {

using Elem = std::uint32_t;
using Stage = std::uint32_t;

constexpr Elem kNone = std::numeric_limits<Elem>::max();

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised for malformed inputs (bad configs, bad schedules, bad specs).
class ConfigError : public Error {
public:
    using Error::Error;
};

class Signature {
public:
    Signature() = default;
    explicit Signature(std::vector<std::string> symbols);

    const std::vector<std::string>& symbols() const { return symbols_; }
    std::size_t size() const { return symbols_.size(); }
    std::uint8_t index_of(const std::string& name) const;
    const std::string& name(std::uint8_t i) const { return symbols_.at(i); }

    bool operator==(const Signature&) const = default;

private:
    std::vector<std::string> symbols_;
};

struct Assignment {
    std::uint8_t symbol = 0;
    Elem src = 0;
    Elem dst = 0;

    bool operator==(const Assignment&) const = default;
};

// New elements of an event are always consecutive, so they are stored as a range.
struct EnumEvent {
    Stage stage = 0;
    Elem first_new = 0;
    Elem new_count = 0;
    std::vector<Assignment> assign;

    std::vector<Elem> new_elements() const;
    bool operator==(const EnumEvent&) const = default;
};

struct StructureLog {
    Signature signature;
    std::vector<EnumEvent> events;
    Stage lag = 1;

    Elem domain_size() const;
    Stage stages() const { return static_cast<Stage>(events.size()); }
    bool operator==(const StructureLog&) const = default;
};

struct Truncation {
    Elem size = 0;
    std::vector<std::vector<Elem>> maps;  // maps[symbol][elem], kNone if undefined

    const std::vector<Elem>& map(std::size_t symbol = 0) const { return maps.at(symbol); }
};

// Truncation after the first `stages` stages of the log.
Truncation truncate(const StructureLog& log, Stage stages);
Truncation truncate_all(const StructureLog& log);

// Stage at which each element was enumerated.
std::vector<Stage> birth_stages(const StructureLog& log);

struct Violation {
    enum class Kind { late, missing, duplicate, empty_stage, bad_stage, bad_element, bad_target };
    Kind kind = Kind::late;
    Elem element = 0;
    std::uint8_t symbol = 0;
    Stage due = 0;
    Stage stage = 0;
};

std::string to_string(Violation::Kind kind);

struct PunctualityReport {
    bool pass = true;
    std::size_t violation_count = 0;
    std::vector<Violation> violations;  // first few only

    std::string summary(const Signature& sig) const;
};

PunctualityReport check_punctuality(const StructureLog& log, std::size_t keep = 64);

Elem fresh_index(const StructureLog& log);

// Incremental writer for one structure. Keeps the per-element bookkeeping needed to
// reject double assignments.
class LogBuilder {
public:
    LogBuilder(Signature sig, Stage lag = 1);

    void begin_stage(Stage s);
    Elem fresh();
    void assign(std::uint8_t symbol, Elem src, Elem dst);
    void assign(Elem src, Elem dst) { assign(0, src, dst); }
    const EnumEvent& end_stage();

    bool assigned(std::uint8_t symbol, Elem e) const;
    Elem value(std::uint8_t symbol, Elem e) const;
    Elem size() const { return next_; }
    bool in_stage() const { return open_; }

    const StructureLog& log() const { return log_; }
    StructureLog take();

private:
    StructureLog log_;
    std::vector<std::vector<Elem>> values_;
    Elem next_ = 0;
    bool open_ = false;
};

class StageMachine {
public:
    virtual ~StageMachine() = default;

    const EnumEvent& advance();
    Stage stage() const { return stage_; }
    Stage horizon() const { return horizon_; }
    const StructureLog& log() const { return out_.log(); }
    StructureLog take() { return out_.take(); }

protected:
    StageMachine(Signature sig, Stage horizon, Stage lag = 1);
    virtual void step(Stage s, LogBuilder& out) = 0;

private:
    LogBuilder out_;
    Stage horizon_;
    Stage stage_ = 0;
};

void run_to_horizon(StageMachine& m);

using ElemMap = std::function<Elem(Elem)>;

// Map backed by a table; throws on elements without an image. The table must outlive the map.
ElemMap canonical_map(const std::vector<Elem>& table);

void write_jsonl(const StructureLog& log, std::ostream& os);
StructureLog read_jsonl(std::istream& is, const Signature& sig, Stage lag = 1);
std::string event_json(const EnumEvent& ev, const Signature& sig);

}  // namespace punctlab
