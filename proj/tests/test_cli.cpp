#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "punctlab/cli.hpp"

namespace fs = std::filesystem;
using namespace punctlab;

namespace {

std::string env(const char* name) {
    const char* v = std::getenv(name);
    REQUIRE_MESSAGE(v, name << " is not set");
    return v;
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("punctlab_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Runs the tool with stdout to `out` (when given); returns the exit status.
int tool(const std::string& args, const fs::path& out = {}, const std::string& prefix = {}) {
    std::string cmd = prefix + "'" + env("PUNCTLAB_BIN") + "' " + args;
    cmd += out.empty() ? " > /dev/null" : " > '" + out.string() + "'";
    cmd += " 2> /dev/null";
    int s = std::system(cmd.c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

std::string cfg(const std::string& name) { return (fs::path(env("PUNCTLAB_EXAMPLES")) / (name + ".json")).string(); }

nlohmann::json json_file(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("d1 at horizon 100 writes two logs and a G table") {
        auto d = scratch("d1");
        REQUIRE(tool("build d1 --config " + cfg("d1") + " --horizon 100 --out " + d.string()) == kExitOk);
        CHECK(fs::exists(d / "logA.jsonl"));
        CHECK(fs::exists(d / "logB.jsonl"));
        CHECK(fs::exists(d / "trace.jsonl"));
        auto meta = json_file(d / "meta.json");
        CHECK(meta.at("horizon") == 100);
        CHECK(meta.at("g_table").size() == 10);
        CHECK(meta.at("G").size() > 10);
        auto dec = d / "dec.json";
        REQUIRE(tool("decode d1 --x 2 --out " + d.string(), dec) == kExitOk);
        auto j = json_file(dec);
        CHECK(j.at("g") == 7);
        CHECK(j.at("G_next") == meta.at("G")[3]);
    }

    TEST_CASE("config errors exit 3") {
        auto d = scratch("bad");
        std::ofstream(d / "empty.json") << R"({"construction":"punctualize","horizon":50,"N0":0,"N1":0})";
        CHECK(tool("build --config " + (d / "empty.json").string() + " --out " + (d / "o").string()) == kExitConfig);
        CHECK_FALSE(fs::exists(d / "o" / "meta.json"));
        std::ofstream(d / "typo.json") << R"({"construction":"d1","horizon":50,"g":{"values":[1],"conv":[0]},"gapp":2})";
        CHECK(tool("build --config " + (d / "typo.json").string() + " --out " + (d / "o").string()) == kExitConfig);
        CHECK(tool("build d2 --config " + cfg("d1") + " --out " + (d / "o").string()) == kExitConfig);
        CHECK(tool("build nope --horizon 5 --out " + (d / "o").string()) == kExitConfig);
        CHECK(tool("frobnicate") == kExitConfig);
        CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"construction":"d1"})")), ConfigError);
        CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"construction":"pressing","horizon":9,"opponents":[{"kind":"copier","delay":0}]})")),
                        ConfigError);
    }

    TEST_CASE("missing artifacts exit 4") {
        auto d = scratch("missing");
        CHECK(tool("verify --out " + d.string()) == kExitArtifacts);
        CHECK(tool("decode d1 --x 0 --out " + d.string()) == kExitArtifacts);
    }

    TEST_CASE("reruns are byte-identical and PUNCTLAB_OUT overrides --out") {
        auto a = scratch("rerun_a"), b = scratch("rerun_b");
        for (const char* c : {"d1", "permitting", "pathological"}) {
            REQUIRE(tool("build --config " + cfg(c) + " --out " + a.string()) == kExitOk);
            REQUIRE(tool("build --config " + cfg(c) + " --out /nonexistent/ignored", {}, "PUNCTLAB_OUT='" + b.string() + "' ") ==
                    kExitOk);
            for (const auto& f : fs::directory_iterator(a)) CHECK(slurp(f.path()) == slurp(b / f.path().filename()));
        }
    }

    TEST_CASE("verify passes on d2 and reports a corrupted assignment") {
        auto d = scratch("d2");
        REQUIRE(tool("build --config " + cfg("d2") + " --out " + d.string()) == kExitOk);
        auto rep = d / "rep.json";
        CHECK(tool("verify --out " + d.string(), rep) == kExitOk);
        auto j = json_file(rep);
        CHECK(j.at("pass") == true);
        bool decoded = false;
        for (const auto& p : j.at("properties"))
            if (p.at("name") == "decode_d2") decoded = p.at("pass") == true && p.at("detail").at("checked") == 15;
        CHECK(decoded);

        // drop one assignment from stage 3 of logB
        std::istringstream in(slurp(d / "logB.jsonl"));
        std::ostringstream out;
        std::string line;
        for (int k = 0; std::getline(in, line); ++k) {
            if (k == 3) {
                auto ev = nlohmann::json::parse(line);
                ev["assign"].erase(0);
                line = ev.dump();
            }
            out << line << '\n';
        }
        std::ofstream(d / "logB.jsonl", std::ios::binary) << out.str();
        CHECK(tool("verify --out " + d.string(), rep) == kExitViolation);
        j = json_file(rep);
        for (const auto& p : j.at("properties")) {
            if (p.at("name") == "punctual:logB.jsonl") {
                CHECK(p.at("pass") == false);
                CHECK(p.at("detail").get<std::string>().find("missing") != std::string::npos);
            }
            if (p.at("name") == "punctual:logA.jsonl") CHECK(p.at("pass") == true);
        }
    }

    TEST_CASE("d2 variant flag") {
        auto d = scratch("d2z");
        REQUIRE(tool("build d2 --variant zeta --config " + cfg("d2") + " --horizon 80 --out " + d.string()) == kExitOk);
        auto meta = json_file(d / "meta.json");
        CHECK(meta.at("variant") == "zeta");
        CHECK(meta.at("config").at("variant") == "zeta");
        CHECK(fs::exists(d / "markers.jsonl"));
        CHECK(tool("verify --out " + d.string()) == kExitOk);
        CHECK(tool("build d2 --variant sideways --config " + cfg("d2") + " --out " + d.string()) == kExitConfig);
    }

    TEST_CASE("pressing artifacts: mirror diff and decode pressing-g") {
        auto d = scratch("pressing");
        REQUIRE(tool("build --config " + cfg("pressing") + " --horizon 150 --out " + d.string()) == kExitOk);
        auto meta = json_file(d / "meta.json");
        std::size_t switches = 0;
        std::set<std::pair<Elem, Elem>> crossed;
        for (const auto& c : meta.at("components"))
            if (!c.at("switch").is_null()) {
                ++switches;
                const Elem t0 = c.at("tail_root"), y = c.at("y");
                crossed.insert({t0, c.at("root")});
                crossed.insert({t0 + y, c.at("dup_root")});
            }
        REQUIRE(switches > 0);
        auto rep = d / "rep.json";
        REQUIRE(tool("verify --out " + d.string(), rep) == kExitOk);
        for (const auto& p : json_file(rep).at("properties"))
            if (p.at("name") == "mirror") {
                CHECK(p.at("detail").size() == 2 * switches);
                std::set<std::pair<Elem, Elem>> got;
                for (const auto& e : p.at("detail")) {
                    CHECK(e.at("symbol") == "P");
                    got.insert({e.at("src"), e.at("B")});
                }
                CHECK(got == crossed);
            }
        auto dec = d / "dec.json";
        for (Nat z : {0, 1, 2, 4}) {
            REQUIRE(tool("decode pressing-g --x " + std::to_string(z) + " --out " + d.string(), dec) == kExitOk);
            auto j = json_file(dec);
            CHECK(j.at("g") == j.at("expected"));
        }
        CHECK(json_file(dec).at("g") == 30);
    }

    TEST_CASE("analyze, trace and DOT") {
        auto d = scratch("punct");
        REQUIRE(tool("build --config " + cfg("punctualize") + " --horizon 40 --dot --out " + d.string()) == kExitOk);
        CHECK(slurp(d / "log.dot").rfind("digraph log {", 0) == 0);
        auto an = d / "an.json";
        REQUIRE(tool("analyze --out " + d.string(), an) == kExitOk);
        auto j = json_file(an);
        CHECK(j.at("segment_count") == 2 + 40);
        CHECK(j.at("cycle_sizes") == nlohmann::json::array({3, 3, 5}));
        REQUIRE(tool("analyze --horizon 5 --log " + (d / "log.jsonl").string(), an) == kExitOk);
        CHECK(json_file(an).at("segment_count") == 2 + 5);
        auto tr = d / "tr.jsonl";
        REQUIRE(tool("trace --config " + cfg("punctualize") + " --horizon 40", tr) == kExitOk);
        CHECK(slurp(tr) == slurp(d / "trace.jsonl"));
        CHECK(tool("verify --out " + d.string()) == kExitOk);
    }

    TEST_CASE("every shipped config verifies") {
        for (const auto& f : fs::directory_iterator(env("PUNCTLAB_EXAMPLES"))) {
            auto d = scratch("all_" + f.path().stem().string());
            CAPTURE(f.path().string());
            REQUIRE(tool("build --config " + f.path().string() + " --out " + d.string()) == kExitOk);
            CHECK(tool("verify --out " + d.string()) == kExitOk);
            fs::remove_all(d);
        }
    }
}
