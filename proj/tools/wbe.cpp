#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "wbe/harness/commands.hpp"

namespace {

using wbe::cfg::json;

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw wbe::io_error("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw wbe::config_error(path + ": " + e.what());
    }
    if (!j.is_object()) throw wbe::config_error(path + ": top level must be a JSON object");
    return j;
}

// WBE_SEED beats the config for the commands that consume a seed, so a whole
// experiment can be re-rolled without editing files.
void apply_seed_env(json& j, const std::string& cmd) {
    if (cmd != "gen" && cmd != "fbp" && cmd != "train" && cmd != "sweep") return;
    const char* s = std::getenv("WBE_SEED");
    if (!s || !*s) return;
    char* end = nullptr;
    unsigned long long v = std::strtoull(s, &end, 10);
    if (!end || *end != '\0') throw wbe::config_error("WBE_SEED must be a base-10 integer");
    j["seed"] = static_cast<std::uint64_t>(v);
}

std::string resolve_out(const std::string& cli_out, const json& j, const std::string& cmd) {
    if (!cli_out.empty()) return cli_out;
    if (j.is_object() && j.contains("out")) return wbe::cfg::get_str(j, cmd, "out");
    return "out_" + cmd;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wide-band scattering toolkit"};
    app.require_subcommand(1);

    std::string config, out;
    int jobs = 1;
    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config, "JSON experiment description")
            ->required()
            ->check(CLI::ExistingFile);
        c->add_option("--out", out, "output directory (beats the config's \"out\")");
        c->add_option("--jobs", jobs, "worker count; this build runs every job serially")
            ->check(CLI::PositiveNumber);
    };
    add_common(app.add_subcommand("gen", "simulate a far-field dataset"));
    add_common(app.add_subcommand("fbp", "filtered back-projection baseline"));
    add_common(app.add_subcommand("train", "fit an inversion model"));
    add_common(app.add_subcommand("rotate-test", "evaluate under quarter-turn rotations"));
    add_common(app.add_subcommand("sweep", "training-size by frequency-set grid"));
    add_common(app.add_subcommand("export", "tensor to PGM or CSV"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    std::string cmd = app.get_subcommands().front()->get_name();

    try {
        json j = load_config(config);
        apply_seed_env(j, cmd);
        std::string dir = resolve_out(out, j, cmd);
        std::filesystem::create_directories(dir);
        if (cmd == "gen") wbe::harness::cmd_gen(j, dir);
        else if (cmd == "fbp") wbe::harness::cmd_fbp(j, dir);
        else if (cmd == "train") wbe::harness::cmd_train(j, dir);
        else if (cmd == "rotate-test") wbe::harness::cmd_rotate_test(j, dir);
        else if (cmd == "sweep") wbe::harness::cmd_sweep(j, dir);
        else wbe::harness::cmd_export(j, dir);
        return 0;
    } catch (const wbe::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const wbe::numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const wbe::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
