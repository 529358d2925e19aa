#include "punctlab/core.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace punctlab {

Signature::Signature(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.empty()) throw ConfigError("signature must have at least one symbol");
    if (symbols_.size() > 255) throw ConfigError("signature too large");
    std::set<std::string> seen;
    for (const auto& s : symbols_) {
        if (s.empty()) throw ConfigError("empty symbol name");
        if (!seen.insert(s).second) throw ConfigError("duplicate symbol name: " + s);
    }
}

std::uint8_t Signature::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < symbols_.size(); ++i)
        if (symbols_[i] == name) return static_cast<std::uint8_t>(i);
    throw ConfigError("unknown symbol: " + name);
}

std::vector<Elem> EnumEvent::new_elements() const {
    std::vector<Elem> out(new_count);
    for (Elem i = 0; i < new_count; ++i) out[i] = first_new + i;
    return out;
}

Elem StructureLog::domain_size() const {
    if (events.empty()) return 0;
    const auto& last = events.back();
    return last.first_new + last.new_count;
}

Truncation truncate(const StructureLog& log, Stage stages) {
    Truncation t;
    std::size_t n = std::min<std::size_t>(stages, log.events.size());
    t.size = n == 0 ? 0 : log.events[n - 1].first_new + log.events[n - 1].new_count;
    t.maps.assign(log.signature.size(), std::vector<Elem>(t.size, kNone));
    for (std::size_t k = 0; k < n; ++k)
        for (const auto& a : log.events[k].assign)
            if (a.src < t.size && a.symbol < t.maps.size()) t.maps[a.symbol][a.src] = a.dst;
    return t;
}

Truncation truncate_all(const StructureLog& log) {
    return truncate(log, log.stages());
}

std::vector<Stage> birth_stages(const StructureLog& log) {
    std::vector<Stage> out(log.domain_size(), 0);
    for (const auto& ev : log.events)
        for (Elem i = 0; i < ev.new_count; ++i) out[ev.first_new + i] = ev.stage;
    return out;
}

std::string to_string(Violation::Kind kind) {
    switch (kind) {
    case Violation::Kind::late: return "late";
    case Violation::Kind::missing: return "missing";
    case Violation::Kind::duplicate: return "duplicate";
    case Violation::Kind::empty_stage: return "empty-stage";
    case Violation::Kind::bad_stage: return "bad-stage";
    case Violation::Kind::bad_element: return "bad-element";
    case Violation::Kind::bad_target: return "bad-target";
    }
    return "?";
}

std::string PunctualityReport::summary(const Signature& sig) const {
    std::ostringstream os;
    os << (pass ? "pass" : "FAIL") << " (" << violation_count << " violations)";
    for (const auto& v : violations) {
        os << "\n  " << to_string(v.kind) << " element " << v.element;
        if (v.symbol < sig.size()) os << " symbol " << sig.name(v.symbol);
        os << " due stage " << v.due << " at stage " << v.stage;
    }
    return os.str();
}

PunctualityReport check_punctuality(const StructureLog& log, std::size_t keep) {
    PunctualityReport rep;
    auto add = [&](Violation v) {
        rep.pass = false;
        ++rep.violation_count;
        if (rep.violations.size() < keep) rep.violations.push_back(v);
    };
    const std::size_t nsym = log.signature.size();
    std::vector<Stage> born;
    std::vector<std::vector<Stage>> when(nsym);
    constexpr Stage unset = std::numeric_limits<Stage>::max();
    Elem next = 0;
    for (std::size_t k = 0; k < log.events.size(); ++k) {
        const auto& ev = log.events[k];
        if (ev.stage != k) add({Violation::Kind::bad_stage, ev.first_new, 0, static_cast<Stage>(k), ev.stage});
        if (ev.new_count == 0) add({Violation::Kind::empty_stage, next, 0, ev.stage, ev.stage});
        if (ev.first_new != next) add({Violation::Kind::bad_element, ev.first_new, 0, ev.stage, ev.stage});
        next = ev.first_new + ev.new_count;
        born.resize(next, ev.stage);
        for (auto& w : when) w.resize(next, unset);
        for (const auto& a : ev.assign) {
            if (a.symbol >= nsym || a.src >= next) {
                add({Violation::Kind::bad_element, a.src, a.symbol, ev.stage, ev.stage});
                continue;
            }
            if (a.dst >= next) add({Violation::Kind::bad_target, a.src, a.symbol, ev.stage, ev.stage});
            auto& slot = when[a.symbol][a.src];
            if (slot != unset) {
                add({Violation::Kind::duplicate, a.src, a.symbol, ev.stage, ev.stage});
                continue;
            }
            slot = ev.stage;
            Stage due = born[a.src] + log.lag;
            if (ev.stage > due) add({Violation::Kind::late, a.src, a.symbol, due, ev.stage});
        }
    }
    const Stage last = log.events.empty() ? 0 : log.events.back().stage;
    for (std::size_t f = 0; f < nsym; ++f)
        for (Elem e = 0; e < next; ++e) {
            if (when[f][e] != unset) continue;
            Stage due = born[e] + log.lag;
            if (due <= last) add({Violation::Kind::missing, e, static_cast<std::uint8_t>(f), due, last});
        }
    return rep;
}

Elem fresh_index(const StructureLog& log) {
    return log.domain_size();
}

LogBuilder::LogBuilder(Signature sig, Stage lag) {
    log_.signature = std::move(sig);
    log_.lag = lag;
    values_.resize(log_.signature.size());
}

void LogBuilder::begin_stage(Stage s) {
    if (open_) throw Error("stage already open");
    if (s != log_.events.size()) throw Error("stages must be consecutive from 0");
    open_ = true;
    EnumEvent ev;
    ev.stage = s;
    ev.first_new = next_;
    log_.events.push_back(std::move(ev));
}

Elem LogBuilder::fresh() {
    if (!open_) throw Error("no open stage");
    ++log_.events.back().new_count;
    for (auto& v : values_) v.push_back(kNone);
    return next_++;
}

void LogBuilder::assign(std::uint8_t symbol, Elem src, Elem dst) {
    if (!open_) throw Error("no open stage");
    if (symbol >= values_.size()) throw Error("bad symbol");
    if (src >= next_ || dst >= next_) throw Error("assignment to unenumerated element");
    if (values_[symbol][src] != kNone)
        throw Error("symbol " + log_.signature.name(symbol) + " assigned twice on " + std::to_string(src));
    values_[symbol][src] = dst;
    log_.events.back().assign.push_back({symbol, src, dst});
}

const EnumEvent& LogBuilder::end_stage() {
    if (!open_) throw Error("no open stage");
    open_ = false;
    return log_.events.back();
}

bool LogBuilder::assigned(std::uint8_t symbol, Elem e) const {
    return values_.at(symbol).at(e) != kNone;
}

Elem LogBuilder::value(std::uint8_t symbol, Elem e) const {
    return values_.at(symbol).at(e);
}

StructureLog LogBuilder::take() {
    values_.clear();
    values_.shrink_to_fit();
    return std::move(log_);
}

StageMachine::StageMachine(Signature sig, Stage horizon, Stage lag)
    : out_(std::move(sig), lag), horizon_(horizon) {}

const EnumEvent& StageMachine::advance() {
    if (stage_ >= horizon_) throw Error("horizon exceeded");
    out_.begin_stage(stage_);
    step(stage_, out_);
    ++stage_;
    return out_.end_stage();
}

void run_to_horizon(StageMachine& m) {
    while (m.stage() < m.horizon()) m.advance();
}

ElemMap canonical_map(const std::vector<Elem>& table) {
    return [&table](Elem a) {
        if (a >= table.size() || table[a] == kNone) throw Error("no image for element " + std::to_string(a));
        return table[a];
    };
}

std::string event_json(const EnumEvent& ev, const Signature& sig) {
    std::string out = "{\"stage\":" + std::to_string(ev.stage) + ",\"new\":[";
    for (Elem i = 0; i < ev.new_count; ++i) {
        if (i) out += ',';
        out += std::to_string(ev.first_new + i);
    }
    out += "],\"assign\":[";
    bool first = true;
    for (const auto& a : ev.assign) {
        if (!first) out += ',';
        first = false;
        out += "[" + nlohmann::json(sig.name(a.symbol)).dump() + "," + std::to_string(a.src) + "," +
               std::to_string(a.dst) + "]";
    }
    out += "]}";
    return out;
}

void write_jsonl(const StructureLog& log, std::ostream& os) {
    for (const auto& ev : log.events) os << event_json(ev, log.signature) << '\n';
}

StructureLog read_jsonl(std::istream& is, const Signature& sig, Stage lag) {
    StructureLog log;
    log.signature = sig;
    log.lag = lag;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
        EnumEvent ev;
        ev.stage = j.at("stage").get<Stage>();
        const auto& nw = j.at("new");
        ev.new_count = static_cast<Elem>(nw.size());
        ev.first_new = nw.empty() ? log.domain_size() : nw.front().get<Elem>();
        for (std::size_t i = 0; i < nw.size(); ++i)
            if (nw[i].get<Elem>() != ev.first_new + i)
                throw ConfigError("line " + std::to_string(lineno) + ": new elements not consecutive");
        for (const auto& a : j.at("assign"))
            ev.assign.push_back({sig.index_of(a.at(0).get<std::string>()), a.at(1).get<Elem>(), a.at(2).get<Elem>()});
        log.events.push_back(std::move(ev));
    }
    return log;
}

}  // namespace punctlab
