// Batch front end: parses a scene file, runs one command against it and
// writes the report plus any artifacts (canonical text, DOT, re-parsable
// complex listings) into the output directory.
//
// Exit codes: 0 success, 2 rejected input (parse or validation failure),
// 3 command gave up (undecided at the bound or out of resources).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polystrata/scene.hpp"

namespace {

constexpr const char* kVersion = "polystrata 0.1.0";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw polystrata::Error(polystrata::ErrorKind::validation,
                                     "cannot open scene file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"polysimplicial stratification toolkit"};
    app.set_version_flag("--version", kVersion);

    std::string scene_path;
    std::string out_dir = "out";
    std::vector<std::string> command;
    unsigned long long bound_opt = 0;
    std::vector<long long> primes;
    unsigned long long seed = 0;

    app.add_option("-s,--scene", scene_path, "scene file to load")->required();
    app.add_option("-o,--out-dir", out_dir, "directory for artifacts")
        ->capture_default_str();
    app.add_option("--bound", bound_opt, "search bound for bounded verdicts");
    app.add_option("--primes", primes, "restrict Kummer degrees to these primes");
    app.add_option("--seed", seed, "reserved; commands are deterministic");
    app.add_option("command", command, "command words, e.g. 'map classify x2N'")
        ->required()
        ->expected(-1);

    CLI11_PARSE(app, argc, argv);

    polystrata::RunOptions opt;
    if (app.count("--bound") > 0) opt.bound = static_cast<size_t>(bound_opt);
    for (long long p : primes) opt.primes.push_back(p);
    opt.seed = seed;

    polystrata::RunResult res;
    try {
        polystrata::Scene scene = polystrata::parse_scene(read_file(scene_path));
        res = polystrata::run_command(scene, command, opt);
    } catch (const polystrata::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return polystrata::status_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    std::cout << res.report;
    if (res.status != 0) return res.status;

    try {
        std::filesystem::create_directories(out_dir);
        for (const auto& [name, content] : res.artifacts) {
            std::ofstream out(std::filesystem::path(out_dir) / name, std::ios::binary);
            out << content;
            if (!out) throw std::runtime_error("cannot write artifact '" + name + "'");
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
