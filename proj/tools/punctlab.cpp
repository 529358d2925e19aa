#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "punctlab/cli.hpp"

namespace fs = std::filesystem;
using namespace punctlab;

namespace {

fs::path out_dir(const std::string& flag) {
    if (const char* env = std::getenv("PUNCTLAB_OUT"); env && *env) return env;
    return flag.empty() ? fs::path("punctlab_out") : fs::path(flag);
}

RunConfig config_for(const std::string& construction, const std::string& path, Stage horizon) {
    if (path.empty()) {
        nlohmann::json j = nlohmann::json::object();
        return run_config_from_json(j, construction, horizon);
    }
    return load_run_config(path, construction, horizon);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"punctlab: punctual structure constructions"};
    app.require_subcommand(1);

    std::string config, out, construction, variant, what, log;
    Stage horizon = 0, stages = 0;
    Nat x = 0;
    bool dot = false;

    auto* build = app.add_subcommand("build", "run a construction and write its artifacts");
    build->add_option("construction", construction, "d1|d2|d3|pathological|permitting|pressing|punctualize");
    build->add_option("--config", config, "config JSON");
    build->add_option("--horizon", horizon, "number of stages");
    build->add_option("--out", out, "output directory (PUNCTLAB_OUT overrides)");
    build->add_option("--variant", variant, "d2 variant")->check(CLI::IsMember({"omega", "zeta"}));
    build->add_flag("--dot", dot, "also write DOT diagrams of the final logs");

    auto* decode = app.add_subcommand("decode", "decode a value from written artifacts");
    decode->add_option("what", what, "d1|d2|d3|pressing-g")->required();
    decode->add_option("--x", x, "argument")->required();
    decode->add_option("--out", out, "artifact directory (PUNCTLAB_OUT overrides)");

    auto* verify = app.add_subcommand("verify", "check written artifacts");
    verify->add_option("--out", out, "artifact directory (PUNCTLAB_OUT overrides)");

    auto* analyze = app.add_subcommand("analyze", "orbit decomposition of a unary log");
    analyze->add_option("--log", log, "log JSONL (default: the first log in the artifact directory)");
    analyze->add_option("--out", out, "artifact directory (PUNCTLAB_OUT overrides)");
    analyze->add_option("--horizon", stages, "truncate after this many stages");

    auto* trace = app.add_subcommand("trace", "print a construction's trace JSONL");
    trace->add_option("construction", construction, "construction name");
    trace->add_option("--config", config, "config JSON");
    trace->add_option("--horizon", horizon, "number of stages");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*build) {
            RunOptions opt;
            opt.dot = dot;
            opt.d2_variant = variant;
            auto cfg = config_for(construction, config, horizon);
            const fs::path dir = out_dir(out);
            for (const auto& f : run(cfg, dir, opt)) std::cout << (dir / f).string() << '\n';
        } else if (*decode) {
            std::cout << decode_dir(what, out_dir(out), x).dump() << '\n';
        } else if (*verify) {
            auto rep = verify_dir(out_dir(out));
            std::cout << rep.dump(2) << '\n';
            if (!rep.at("pass").get<bool>()) return kExitViolation;
        } else if (*analyze) {
            fs::path p = log;
            if (p.empty()) {
                const fs::path dir = out_dir(out);
                p = fs::exists(dir / "logA.jsonl") ? dir / "logA.jsonl" : dir / "log.jsonl";
            }
            if (!fs::exists(p)) throw MissingArtifact("missing log " + p.string());
            std::cout << analyze_log(p, stages).dump() << '\n';
        } else if (*trace) {
            std::cout << trace_text(config_for(construction, config, horizon));
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const MissingArtifact& e) {
        std::cerr << "missing artifact: " << e.what() << '\n';
        return kExitArtifacts;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitViolation;
    }
    return kExitOk;
}
