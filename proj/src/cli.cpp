#include "punctlab/cli.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "punctlab/encode_d1.hpp"
#include "punctlab/encode_d2.hpp"
#include "punctlab/encode_d3.hpp"
#include "punctlab/injection.hpp"
#include "punctlab/pathological.hpp"
#include "punctlab/permitting.hpp"
#include "punctlab/pressing.hpp"

namespace punctlab {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"d1", {"g", "sizes", "first", "gap", "reveal"}},
        {"d2", {"g2", "variant", "fixed_count", "finite"}},
        {"d3", {"g3", "finite"}},
        {"pathological", {"schemes", "opponents", "g", "wait_cap"}},
        {"permitting", {"W", "requirements"}},
        {"pressing", {"W", "catalog", "opponents"}},
        {"punctualize", {"N0", "N1", "finite"}},
    };
    return keys;
}

std::vector<Reveal> reveals_from(const nlohmann::json& j) {
    std::vector<Reveal> r;
    for (const auto& e : j) r.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<Stage>()});
    return r;
}

Count count_from(const nlohmann::json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return kInfinite;
        throw ConfigError("orbit count must be a number or \"inf\"");
    }
    return j.get<Count>();
}

D1Config d1_from(const nlohmann::json& b) {
    D1Config c;
    c.g = clocked_from_json(b.at("g"));
    if (b.contains("sizes")) c.sizes = b.at("sizes").get<std::vector<std::uint32_t>>();
    c.first = b.value("first", c.first);
    c.gap = b.value("gap", c.gap);
    if (b.contains("reveal")) c.reveal = b.at("reveal").get<std::vector<Stage>>();
    c.validate();
    return c;
}

D2Variant variant_from(const std::string& v) {
    if (v == "omega") return D2Variant::omega;
    if (v == "zeta") return D2Variant::zeta;
    throw ConfigError("d2 variant must be omega or zeta");
}

D2Config d2_from(const nlohmann::json& b) {
    D2Config c;
    c.g2 = approx2_from_json(b.at("g2"));
    c.variant = variant_from(b.value("variant", std::string("omega")));
    c.fixed_count = b.value("fixed_count", std::uint32_t{0});
    if (b.contains("finite")) c.finite = reveals_from(b.at("finite"));
    c.g2.validate();
    InjSpec{1, 0, c.finite}.validate();
    return c;
}

D3Config d3_from(const nlohmann::json& b) {
    D3Config c;
    c.g3 = approx3_from_json(b.at("g3"));
    if (b.contains("finite")) c.finite = reveals_from(b.at("finite"));
    c.g3.validate();
    InjSpec{1, 0, c.finite}.validate();
    return c;
}

InjSpec inj_from(const nlohmann::json& b) {
    InjSpec s;
    if (b.contains("N0")) s.N0 = count_from(b.at("N0"));
    if (b.contains("N1")) s.N1 = count_from(b.at("N1"));
    if (b.contains("finite")) s.finite = reveals_from(b.at("finite"));
    s.validate();
    return s;
}

PathConfig path_from(const nlohmann::json& b) {
    auto c = path_config_from_json(b);
    PathState check(c);
    (void)check;
    return c;
}

PressConfig press_from(const nlohmann::json& b) {
    auto c = press_config_from_json(b);
    c.W.validate();
    for (const auto& p : c.catalog) p.validate();
    return c;
}

PermitConfig permit_from(const nlohmann::json& b) {
    auto c = permit_config_from_json(b);
    c.W.validate();
    return c;
}

void validate_body(const std::string& con, const nlohmann::json& b) {
    if (con == "d1") d1_from(b);
    else if (con == "d2") d2_from(b);
    else if (con == "d3") d3_from(b);
    else if (con == "pathological") path_from(b);
    else if (con == "permitting") permit_from(b);
    else if (con == "pressing") press_from(b);
    else if (con == "punctualize") inj_from(b);
}

std::string log_text(const StructureLog& log) {
    std::ostringstream os;
    write_jsonl(log, os);
    return os.str();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw MissingArtifact("missing artifact: " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << s;
}

std::string jsonl(const std::vector<ojson>& rows) {
    std::string s;
    for (const auto& r : rows) s += r.dump() + '\n';
    return s;
}

ojson label_json(const D3Label& l) { return ojson::array({static_cast<int>(l.family), l.i, l.j}); }

D3Label label_from(const nlohmann::json& j) {
    return {static_cast<D3Family>(j.at(0).get<int>()), j.at(1).get<std::uint32_t>(), j.at(2).get<std::uint32_t>()};
}

ojson tuple_json(const TupleValue& t) { return ojson(t); }

ojson opt_stage(const std::optional<Stage>& s) { return s ? ojson(*s) : ojson(nullptr); }

// One constructed run: the files to emit plus what verification needs.
struct Built {
    std::vector<std::pair<std::string, const StructureLog*>> logs;  // builder logs
    std::vector<std::pair<std::string, const StructureLog*>> extra_logs;  // opponents
    std::vector<std::pair<std::string, std::string>> files;
    ojson meta;
    std::string trace;
};

template <class F>
auto config_guard(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

// Holds every construction's output so the logs referenced by Built stay alive.
struct Holder {
    BuildOutputD1 d1;
    BuildOutputD2 d2;
    BuildOutputD3 d3;
    PathOutput path;
    PermitOutput permit;
    PressOutput press;
    PunctualizeOutput punct;
};

Built build(const RunConfig& cfg, Holder& h, const RunOptions& opt = {}) {
    Built b;
    const auto& body = cfg.body;
    const Stage H = cfg.horizon;
    b.meta["construction"] = cfg.construction;
    b.meta["horizon"] = H;
    b.meta["config"] = body;
    std::vector<ojson> tr;
    if (cfg.construction == "d1") {
        auto c = config_guard([&] { return d1_from(body); });
        h.d1 = build_d1(c, H);
        const auto& o = h.d1;
        b.logs = {{"logA.jsonl", &o.logA}, {"logB.jsonl", &o.logB}};
        ojson gt = ojson::array();
        for (Nat x = 0; x < c.g.values.size(); ++x)
            gt.push_back({{"x", x}, {"g", c.g.value(x)}, {"conv", c.g.convergence(x)}, {"size", c.size(x)}});
        b.meta["g_table"] = gt;
        b.meta["G"] = o.G;
        b.meta["stageB"] = o.stageB;
        b.meta["canonical"] = o.canonical;
        for (std::size_t x = 0; x < o.G.size(); ++x)
            tr.push_back({{"stage", o.G[x]}, {"event", "orbit"}, {"log", "A"}, {"x", x}, {"size", c.size(x)}});
        for (std::size_t x = 0; x < o.stageB.size(); ++x)
            tr.push_back({{"stage", o.stageB[x]}, {"event", "orbit"}, {"log", "B"}, {"x", x}, {"size", c.size(x)}});
    } else if (cfg.construction == "d2") {
        auto c = config_guard([&] { return d2_from(body); });
        if (!opt.d2_variant.empty()) c.variant = variant_from(opt.d2_variant);
        h.d2 = build_d2(c, H);
        const auto& o = h.d2;
        b.logs = {{"logA.jsonl", &o.logA}, {"logB.jsonl", &o.logB}};
        b.files.emplace_back("markers.jsonl", markers_jsonl(o.markers));
        b.meta["variant"] = c.variant == D2Variant::omega ? "omega" : "zeta";
        b.meta["a_anchors"] = o.a_anchors;
        b.meta["canonical"] = o.canonical;
        ojson lim = ojson::array();
        for (Nat x = 0; x < c.g2.rows.size(); ++x) lim.push_back(c.g2.limit(x));
        b.meta["limits"] = lim;
        for (const auto& g : o.glues) tr.push_back({{"stage", g.stage}, {"event", "glue"}, {"x", g.x}});
    } else if (cfg.construction == "d3") {
        auto c = config_guard([&] { return d3_from(body); });
        h.d3 = build_d3(c, H);
        const auto& o = h.d3;
        b.logs = {{"logA.jsonl", &o.logA}, {"logB.jsonl", &o.logB}};
        b.meta["a_anchors"] = o.index.a_anchors;
        b.meta["c_anchors"] = o.index.c_anchors;
        ojson la = ojson::array(), lb = ojson::array();
        for (const auto& l : o.index.labelsA) la.push_back(label_json(l));
        for (const auto& l : o.index.labelsB) lb.push_back(label_json(l));
        b.meta["labelsA"] = la;
        b.meta["labelsB"] = lb;
        b.meta["canonical"] = o.canonical;
        b.meta["canonical_inv"] = o.canonical_inv;
        ojson lim = ojson::array();
        for (Nat x = 0; x < c.g3.rows.size(); ++x) lim.push_back(c.g3.limit(x));
        b.meta["limits"] = lim;
        for (const auto& f : o.firings) tr.push_back({{"stage", f.stage}, {"event", "fire"}, {"x", f.x}, {"s", f.s}});
        for (const auto& [s, x] : o.rebases) tr.push_back({{"stage", s}, {"event", "rebase"}, {"x", x}});
    } else if (cfg.construction == "pathological") {
        auto c = config_guard([&] { return path_from(body); });
        h.path = build_pathological(c, H);
        const auto& o = h.path;
        b.logs = {{"logA.jsonl", &o.logA}};
        ojson d = ojson::array();
        for (const auto& t : o.d) d.push_back(tuple_json(t));
        b.meta["d"] = d;
        b.meta["n"] = o.n;
        b.meta["s"] = o.s;
        ojson acted = ojson::array();
        for (const auto& a : o.acted) acted.push_back(opt_stage(a));
        b.meta["acted"] = acted;
        ojson orbits = ojson::array();
        for (const auto& r : o.a_orbits) orbits.push_back({r.size, r.stage, r.tick});
        b.meta["a_orbits"] = orbits;
        b.trace = trace_jsonl(o.trace);
    } else if (cfg.construction == "permitting") {
        auto c = config_guard([&] { return permit_from(body); });
        h.permit = build_low(c, H);
        const auto& o = h.permit;
        b.files.emplace_back("report.json", permit_report(o, 12).dump(2) + "\n");
        std::vector<ojson> ch;
        for (const auto& f : o.f_changes) ch.push_back({{"stage", f.stage}, {"y", f.y}, {"from", f.from}, {"to", f.to}});
        b.files.emplace_back("f_changes.jsonl", jsonl(ch));
        b.meta["f"] = o.f;
        b.meta["markers"] = std::vector<Nat>(o.m.begin(), o.m.begin() + std::min<std::size_t>(o.m.size(), 32));
        b.trace = trace_jsonl(o.trace);
    } else if (cfg.construction == "pressing") {
        auto c = config_guard([&] { return press_from(body); });
        h.press = build_pressing(c, H);
        const auto& o = h.press;
        b.logs = {{"logB.jsonl", &o.logB}, {"logB2.jsonl", &o.logB2}};
        for (std::size_t n = 0; n < o.opponent_logs.size(); ++n)
            b.extra_logs.emplace_back("opponent_" + std::to_string(n) + ".jsonl", &o.opponent_logs[n]);
        b.meta["components"] = component_table(o);
        ojson al = ojson::array();
        for (const auto& a : o.allocations)
            al.push_back({{"size", a.size}, {"bound", a.bound}, {"what", std::string(1, a.what)}, {"e", a.e}, {"stage", a.stage}});
        b.meta["allocations"] = al;
        ojson ret = ojson::array();
        for (auto [m, s] : o.retired) ret.push_back({m, s});
        b.meta["retired"] = ret;
        ojson st = ojson::array();
        for (const auto& s : o.statuses) {
            ojson r;
            r["state"] = to_string(s.state);
            if (s.state == OpponentState::pending) r["level"] = s.level;
            if (s.state == OpponentState::inactive) {
                r["reason"] = s.reason;
                r["size"] = s.size;
            }
            st.push_back(r);
        }
        b.meta["opponents"] = st;
        b.meta["canonical"] = canonical_press_iso(o);
        b.trace = trace_jsonl(o.trace);
    } else if (cfg.construction == "punctualize") {
        auto s = config_guard([&] { return inj_from(body); });
        h.punct = punctualize(s, H);
        const auto& o = h.punct;
        b.logs = {{"log.jsonl", &o.log}};
        ojson chains = ojson::array();
        for (const auto& c : o.chains)
            chains.push_back({{"zeta", c.zeta}, {"start", c.start}, {"length", c.members.size()}});
        b.meta["chains"] = chains;
        ojson cyc = ojson::array();
        for (const auto& c : o.cycles) cyc.push_back(c.size());
        b.meta["cycles"] = cyc;
        for (const auto& c : o.chains)
            tr.push_back({{"stage", c.start}, {"event", "chain"}, {"kind", c.zeta ? "zeta" : "omega"}});
    } else {
        throw ConfigError("unknown construction: " + cfg.construction);
    }
    std::stable_sort(tr.begin(), tr.end(),
                     [](const ojson& x, const ojson& y) { return x["stage"].get<Stage>() < y["stage"].get<Stage>(); });
    if (b.trace.empty()) b.trace = jsonl(tr);
    ojson files = ojson::array();
    for (const auto& [n, l] : b.logs) files.push_back(n);
    b.meta["logs"] = files;
    ojson extra = ojson::array();
    for (const auto& [n, l] : b.extra_logs) extra.push_back(n);
    b.meta["opponent_logs"] = extra;
    return b;
}

Signature signature_of(const std::string& construction) {
    return construction == "pressing" ? pressing_signature() : Signature({"f"});
}

struct Report {
    ojson props = ojson::array();
    bool pass = true;

    void add(const std::string& name, bool ok, ojson detail = nullptr) {
        ojson p;
        p["name"] = name;
        p["pass"] = ok;
        if (!detail.is_null()) p["detail"] = std::move(detail);
        props.push_back(std::move(p));
        pass = pass && ok;
    }
};

nlohmann::json read_meta(const fs::path& dir) {
    try {
        return nlohmann::json::parse(read_file(dir / "meta.json"));
    } catch (const nlohmann::json::exception& e) {
        throw MissingArtifact(std::string("unreadable meta.json: ") + e.what());
    }
}

StructureLog read_log(const fs::path& p, const Signature& sig) {
    std::istringstream in(read_file(p));
    return read_jsonl(in, sig);
}

RunConfig config_of(const nlohmann::json& meta) {
    RunConfig c;
    c.construction = meta.at("construction").get<std::string>();
    c.horizon = meta.at("horizon").get<Stage>();
    c.body = meta.at("config");
    return c;
}

std::vector<Elem> table_of(const nlohmann::json& j) { return j.get<std::vector<Elem>>(); }

}  // namespace

const std::vector<std::string>& construction_names() {
    static const std::vector<std::string> names = {"d1", "d2", "d3", "pathological", "permitting", "pressing",
                                                   "punctualize"};
    return names;
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::string& construction, Stage horizon) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    std::string from_file = j.contains("construction") ? j.at("construction").get<std::string>() : "";
    if (!construction.empty() && !from_file.empty() && construction != from_file)
        throw ConfigError("config is for " + from_file + ", not " + construction);
    c.construction = construction.empty() ? from_file : construction;
    auto it = allowed_keys().find(c.construction);
    if (it == allowed_keys().end()) throw ConfigError("unknown construction: " + c.construction);
    c.horizon = horizon ? horizon : j.value("horizon", Stage{0});
    if (c.horizon == 0) throw ConfigError("horizon must be positive");
    c.body = ojson::object();
    for (auto kv = j.begin(); kv != j.end(); ++kv) {
        if (kv.key() == "construction" || kv.key() == "horizon") continue;
        if (!it->second.count(kv.key())) throw ConfigError("unknown field for " + c.construction + ": " + kv.key());
    }
    // keep the field order of the construction's key list
    for (const auto& k : it->second)
        if (j.contains(k)) c.body[k] = j.at(k);
    config_guard([&] {
        validate_body(c.construction, c.body);
        return 0;
    });
    return c;
}

RunConfig load_run_config(const fs::path& path, const std::string& construction, Stage horizon) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return run_config_from_json(j, construction, horizon);
}

std::vector<std::string> run(const RunConfig& cfg, const fs::path& dir, const RunOptions& opt) {
    Holder h;
    Built b = build(cfg, h, opt);
    if (!opt.d2_variant.empty()) b.meta["config"]["variant"] = opt.d2_variant;
    fs::create_directories(dir);
    std::vector<std::string> names;
    auto emit = [&](const std::string& n, const std::string& s) {
        write_file(dir / n, s);
        names.push_back(n);
    };
    for (const auto& [n, l] : b.logs) emit(n, log_text(*l));
    for (const auto& [n, l] : b.extra_logs) emit(n, log_text(*l));
    for (const auto& [n, s] : b.files) emit(n, s);
    emit("meta.json", b.meta.dump(2) + "\n");
    emit("trace.jsonl", b.trace);
    if (opt.dot)
        for (const auto& [n, l] : b.logs)
            emit(n.substr(0, n.find('.')) + ".dot", to_dot(truncate_all(*l), l->signature, n.substr(0, n.find('.'))));
    return names;
}

std::string trace_text(const RunConfig& cfg) {
    Holder h;
    return build(cfg, h).trace;
}

nlohmann::ordered_json verify_dir(const fs::path& dir) {
    const auto meta = read_meta(dir);
    RunConfig cfg;
    try {
        cfg = config_of(meta);
        cfg = run_config_from_json(nlohmann::json::parse(cfg.body.dump()), cfg.construction, cfg.horizon);
    } catch (const nlohmann::json::exception& e) {
        throw MissingArtifact(std::string("meta.json lacks the run config: ") + e.what());
    }
    const Signature sig = signature_of(cfg.construction);
    Report rep;
    std::map<std::string, StructureLog> logs;
    for (const auto& key : {"logs", "opponent_logs"}) {
        if (!meta.contains(key)) continue;
        for (const auto& n : meta.at(key)) {
            const std::string name = n.get<std::string>();
            logs[name] = read_log(dir / name, sig);
        }
    }
    for (const auto& n : meta.value("logs", nlohmann::json::array())) {
        const std::string name = n.get<std::string>();
        auto r = check_punctuality(logs[name], 8);
        rep.add("punctual:" + name, r.pass, r.pass ? ojson(nullptr) : ojson(r.summary(sig)));
    }
    for (const auto& n : meta.value("opponent_logs", nlohmann::json::array())) {
        const std::string name = n.get<std::string>();
        auto r = check_punctuality(logs[name], 1000);
        bool ok = true;
        Stage lead = 0;
        while (lead < logs[name].events.size() && logs[name].events[lead].new_count == 0) ++lead;
        for (const auto& v : r.violations) ok &= v.kind == Violation::Kind::empty_stage && v.stage < lead;
        rep.add("punctual-after-delay:" + name, ok && r.violation_count <= lead);
    }

    Holder h;
    Built b = build(cfg, h);
    {
        bool same = true;
        ojson bad = ojson::array();
        auto cmp = [&](const std::string& n, const std::string& want) {
            std::string have;
            try {
                have = read_file(dir / n);
            } catch (const MissingArtifact&) {
            }
            if (have != want) {
                same = false;
                bad.push_back(n);
            }
        };
        for (const auto& [n, l] : b.logs) cmp(n, log_text(*l));
        for (const auto& [n, l] : b.extra_logs) cmp(n, log_text(*l));
        for (const auto& [n, s] : b.files) cmp(n, s);
        cmp("trace.jsonl", b.trace);
        rep.add("replay", same, same ? ojson(nullptr) : bad);
    }

    const Stage H = cfg.horizon;
    if (cfg.construction == "d1") {
        const auto c = d1_from(cfg.body);
        const auto table = table_of(meta.at("canonical"));
        const auto f = canonical_map(table);
        const auto& logA = logs.at("logA.jsonl");
        OrbitTimeline tl(logA);
        const auto stageB = meta.at("stageB").get<std::vector<Stage>>();
        const auto G = meta.at("G").get<std::vector<Stage>>();
        bool ok = true;
        std::size_t n = 0;
        ojson bad = ojson::array();
        for (Nat x = 0; x < 20 && x + 1 < stageB.size() && x + 1 < G.size(); ++x) {
            try {
                auto [gx, Gn] = decode_d1(f, x, G[0], c.g, tl);
                if (gx != c.g.value(x) || Gn != G[x + 1]) {
                    ok = false;
                    bad.push_back(x);
                }
            } catch (const Error&) {
                ok = false;
                bad.push_back(x);
            }
            ++n;
        }
        rep.add("decode_d1", ok && n > 0, {{"checked", n}, {"failed", bad}});
        bool delay = true;
        for (std::size_t x = 0; x + 1 < stageB.size() && x + 1 < G.size(); ++x)
            delay &= stageB[x] >= std::max<Stage>(c.g.convergence(x), G[x + 1]);
        rep.add("delay", delay);
    } else if (cfg.construction == "d2") {
        const auto c = d2_from(cfg.body);
        const auto table = table_of(meta.at("canonical"));
        const auto f = canonical_map(table);
        const auto anchors = meta.at("a_anchors").get<std::vector<Elem>>();
        bool ok = true;
        std::size_t n = 0;
        ojson bad = ojson::array();
        for (Nat x = 0; x < 15; ++x) {
            if (2 * (c.g2.last_change(x) + x + 2) >= H) continue;
            try {
                if (decode_d2(f, c.g2, x, anchors) != c.g2.limit(x)) {
                    ok = false;
                    bad.push_back(x);
                }
            } catch (const Error&) {
                ok = false;
                bad.push_back(x);
            }
            ++n;
        }
        rep.add("decode_d2", ok, {{"checked", n}, {"failed", bad}});
    } else if (cfg.construction == "d3") {
        const auto c = d3_from(cfg.body);
        const auto t = table_of(meta.at("canonical"));
        const auto ti = table_of(meta.at("canonical_inv"));
        const auto f = canonical_map(t), fi = canonical_map(ti);
        D3Index idx;
        idx.a_anchors = meta.at("a_anchors").get<std::vector<Elem>>();
        idx.c_anchors = meta.at("c_anchors").get<std::vector<Elem>>();
        for (const auto& l : meta.at("labelsA")) idx.labelsA.push_back(label_from(l));
        for (const auto& l : meta.at("labelsB")) idx.labelsB.push_back(label_from(l));
        bool ok = true;
        std::size_t n = 0;
        ojson bad = ojson::array();
        const Nat X = H >= 500 ? 6 : H / 100;
        for (Nat x = 0; x < X; ++x) {
            try {
                if (decode_d3(f, fi, c.g3, x, idx) != c.g3.limit(x)) {
                    ok = false;
                    bad.push_back(x);
                }
            } catch (const Error&) {
                ok = false;
                bad.push_back(x);
            }
            ++n;
        }
        rep.add("decode_d3", ok, {{"checked", n}, {"failed", bad}});
    } else if (cfg.construction == "pathological") {
        auto ck = check_trace(h.path, path_from(cfg.body).schemes.size());
        rep.add("single_act", ck.single_act);
        rep.add("sizes_retired", ck.sizes_retired);
        rep.add("permanence", ck.permanence);
        rep.add("markers_monotone", ck.markers_monotone);
        rep.add("diagonalized", ck.diagonalized);
    } else if (cfg.construction == "permitting") {
        const auto c = permit_from(cfg.body);
        const auto& o = h.permit;
        auto eq = verify_equiv(o, c.W, 12, o.f.size() + 40);
        rep.add("verify_equiv", eq.pass(), {{"conclusive", eq.conclusive}});
        bool permitted = true;
        for (const auto& ch : o.f_changes) {
            bool p = false;
            for (Nat z : c.W.entering_at(ch.stage)) p |= z <= ch.y;
            permitted &= p;
        }
        rep.add("permitting", permitted);
        bool mono = true;
        for (const auto& ps : o.pointers_by_stage)
            for (std::size_t e = 0; e + 1 < ps.size(); ++e) mono &= ps[e] < ps[e + 1];
        rep.add("pointers_increasing", mono);
    } else if (cfg.construction == "pressing") {
        const auto c = press_from(cfg.body);
        const auto& o = h.press;
        auto ck = check_pressing(o);
        rep.add("single_open", ck.single_open);
        rep.add("sizes_distinct", ck.sizes_distinct);
        rep.add("bounds", ck.bounds);
        bool M = true;
        for (std::size_t e = 0; e < 64; ++e) M &= press_M(e + 1) == 4 * (e + 1);
        rep.add("m_table", M && (o.components.empty() || o.components[0].x == 1));
        // mirror diff read from the artifacts
        const auto& B = logs.at("logB.jsonl");
        const auto& B2 = logs.at("logB2.jsonl");
        std::set<std::pair<Elem, Elem>> want;
        for (const auto& k : o.components)
            if (k.switched) {
                want.insert({k.tail_root(), k.root()});
                want.insert({k.tail_second(), k.dup_root()});
            }
        ojson diffs = ojson::array();
        std::set<std::pair<Elem, Elem>> got;
        bool shape = B.events.size() == B2.events.size();
        for (std::size_t s = 0; shape && s < B.events.size(); ++s) {
            const auto& x = B.events[s];
            const auto& y = B2.events[s];
            if (x.new_count != y.new_count || x.assign.size() != y.assign.size()) {
                shape = false;
                break;
            }
            for (std::size_t k = 0; k < x.assign.size(); ++k)
                if (!(x.assign[k] == y.assign[k])) {
                    diffs.push_back({{"stage", s}, {"symbol", sig.name(x.assign[k].symbol)}, {"src", x.assign[k].src},
                                     {"B", x.assign[k].dst}, {"B2", y.assign[k].dst}});
                    if (x.assign[k].symbol == kP && x.assign[k].src == y.assign[k].src)
                        got.insert({x.assign[k].src, x.assign[k].dst});
                    else
                        shape = false;
                }
        }
        rep.add("mirror", shape && got == want && diffs.size() == 2 * ck.switches, diffs);
        GTable g{c.W, c.catalog};
        const auto table = table_of(meta.at("canonical"));
        const auto f = canonical_map(table);
        bool ok = true;
        std::size_t n = 0;
        ojson bad = ojson::array();
        for (Nat z = 0; z < 8; ++z) {
            if (2 * z + 1 >= o.components.size() || !o.components[2 * z].switched) break;
            try {
                if (decode_g(o, f, f, z, g) != g(z)) {
                    ok = false;
                    bad.push_back(z);
                }
            } catch (const Error&) {
                ok = false;
                bad.push_back(z);
            }
            ++n;
        }
        rep.add("decode_g", ok, {{"checked", n}, {"failed", bad}});
    } else if (cfg.construction == "punctualize") {
        const auto s = inj_from(cfg.body);
        const auto& log = logs.at("log.jsonl");
        bool ok = true;
        for (Stage st : {H / 4, H / 2, H}) {
            if (st == 0) continue;
            auto d = decompose(truncate(log, st));
            const Count want = std::min<Count>(st, s.N0) + std::min<Count>(st, s.N1);
            ok &= d.segments.size() == want;
        }
        rep.add("open_segments", ok);
    }

    ojson out;
    out["construction"] = cfg.construction;
    out["horizon"] = H;
    out["properties"] = rep.props;
    out["pass"] = rep.pass;
    return out;
}

nlohmann::ordered_json decode_dir(const std::string& what, const fs::path& dir, Nat x) {
    const auto meta = read_meta(dir);
    const RunConfig cfg = config_of(meta);
    const std::string con = what == "pressing-g" ? "pressing" : what;
    if (cfg.construction != con) throw ConfigError("artifacts are for " + cfg.construction + ", not " + what);
    ojson out;
    out["x"] = x;
    if (what == "d1") {
        const auto c = d1_from(cfg.body);
        const auto logA = read_log(dir / "logA.jsonl", Signature({"f"}));
        const auto table = table_of(meta.at("canonical"));
        const auto G = meta.at("G").get<std::vector<Stage>>();
        if (G.empty()) throw Error("no finite orbit was enumerated");
        auto [gx, Gn] = decode_d1(canonical_map(table), x, G[0], c.g, logA);
        out["g"] = gx;
        out["G_next"] = Gn;
    } else if (what == "d2") {
        const auto c = d2_from(cfg.body);
        const auto table = table_of(meta.at("canonical"));
        out["value"] = decode_d2(canonical_map(table), c.g2, x, meta.at("a_anchors").get<std::vector<Elem>>());
    } else if (what == "d3") {
        const auto c = d3_from(cfg.body);
        const auto t = table_of(meta.at("canonical"));
        const auto ti = table_of(meta.at("canonical_inv"));
        D3Index idx;
        idx.a_anchors = meta.at("a_anchors").get<std::vector<Elem>>();
        idx.c_anchors = meta.at("c_anchors").get<std::vector<Elem>>();
        for (const auto& l : meta.at("labelsA")) idx.labelsA.push_back(label_from(l));
        for (const auto& l : meta.at("labelsB")) idx.labelsB.push_back(label_from(l));
        out["value"] = decode_d3(canonical_map(t), canonical_map(ti), c.g3, x, idx);
    } else if (what == "pressing-g") {
        const auto c = press_from(cfg.body);
        PressOutput o;
        for (const auto& r : meta.at("components")) {
            ComponentRecord k;
            k.e = r.at("e").get<std::size_t>();
            k.x = r.at("x").get<Nat>();
            k.first = r.at("root").get<Elem>();
            k.count = r.at("elements").get<Elem>();
            if (!r.at("switch").is_null()) {
                k.switched = r.at("switch").get<Stage>();
                k.dup_first = r.at("dup_root").get<Elem>();
            }
            o.components.push_back(k);
        }
        const auto table = table_of(meta.at("canonical"));
        const auto f = canonical_map(table);
        GTable g{c.W, c.catalog};
        auto [a, y] = unpair(x);
        out["a"] = a;
        out["arg"] = y;
        out["g"] = decode_g(o, f, f, x, g);
        out["expected"] = g(x);
    } else {
        throw ConfigError("nothing to decode for " + what);
    }
    return out;
}

nlohmann::ordered_json analyze_log(const fs::path& path, Stage stages) {
    StructureLog log;
    try {
        log = read_log(path, Signature({"f"}));
    } catch (const ConfigError& e) {
        throw ConfigError("analyze expects a unary log: " + std::string(e.what()));
    }
    const auto t = stages ? truncate(log, stages) : truncate_all(log);
    auto d = decompose(t);
    auto ch = character(d);
    ojson out;
    out["stages"] = stages ? stages : log.stages();
    out["domain"] = t.size;
    out["cycle_count"] = d.cycles.size();
    out["segment_count"] = d.segments.size();
    out["cycle_sizes"] = ch.cycle_sizes;
    out["segment_lengths"] = ch.segment_lengths;
    return out;
}

std::string to_dot(const Truncation& t, const Signature& sig, const std::string& name) {
    std::string s = "digraph " + name + " {\n";
    for (Elem v = 0; v < t.size; ++v) s += "  " + std::to_string(v) + ";\n";
    for (std::size_t f = 0; f < sig.size(); ++f)
        for (Elem v = 0; v < t.size; ++v) {
            const Elem w = t.map(f)[v];
            if (w == kNone) continue;
            s += "  " + std::to_string(v) + " -> " + std::to_string(w);
            if (sig.size() > 1) s += " [label=\"" + sig.name(static_cast<std::uint8_t>(f)) + "\"]";
            s += ";\n";
        }
    return s + "}\n";
}

}  // namespace punctlab
