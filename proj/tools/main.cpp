// Command line front end: run one scenario config or sweep a set of them.
#include <cstdio>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "parasafe/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"parabolic cascade safety controller"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --out/--stride/--strict appear after the subcommand

    std::string out_dir;
    int stride = 0;
    bool strict = false;
    app.add_option("--out", out_dir, "output root directory (overrides config)");
    app.add_option("--stride", stride, "snapshot stride override (rows kept every step)");
    app.add_flag("--strict", strict, "treat warnings as failures");

    std::string config;
    CLI::App* run = app.add_subcommand("run", "run a single scenario");
    run->add_option("config", config, "scenario JSON file")->required();

    std::string pattern;
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;
    CLI::App* sw = app.add_subcommand("sweep", "run every config matching a pattern");
    sw->add_option("glob", pattern, "config file pattern, e.g. configs/*.json")->required();
    sw->add_option("--jobs", jobs, "parallel scenario count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return parasafe::run_and_report(parasafe::load_scenario(config), out_dir, stride,
                                            strict);
        return parasafe::sweep(pattern, jobs, out_dir, stride, strict);
    } catch (const parasafe::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
