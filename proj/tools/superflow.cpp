#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "superflow/commands.hpp"

int main(int argc, char** argv) {
    using namespace superflow;
    CLI::App app{"Super Lie calculus on superdomains: flows, local actions, holonomy and globalizability verdicts"};
    std::string command;
    std::string scenario;
    std::string t_text;
    CommandOptions opt;
    bool json = false;
    app.add_option("command", command, "one of: check-algebra check-homomorphism bracket reduced involutive flow "
                                       "odd-exp local-action check-action transport holonomy homotopy-check "
                                       "verdict verify-embedding support")
        ->required();
    app.add_option("scenario", scenario, "scenario file or built-in name (s1-example, c-example, c-example:<alpha>)")
        ->required();
    app.add_option("--loop", opt.loop, "loop name or comma-separated loop names");
    app.add_option("--field,--fields", opt.field, "field list name, <list>:<k> or basis element");
    app.add_option("--t", t_text, "flow time (expression, may be complex)");
    app.add_option("--base", opt.base, "base point k=v,...");
    app.add_option("--step", opt.step, "integration step");
    app.add_option("--jet", opt.jet_order, "jet order J (0..4)");
    app.add_option("--samples", opt.samples, "sample count");
    app.add_option("--seed", opt.seed, "sampling seed");
    app.add_option("--flags", opt.flags, "verdict flag overrides k=v,...");
    app.add_flag("--json", json, "print the JSON report");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        const auto& names = command_names();
        if (std::find(names.begin(), names.end(), command) == names.end())
            throw Error("unknown command '" + command + "'");
        if (!t_text.empty()) opt.t = evaluate(parse_expr(t_text, {}), Env{}, Field::complex);
        const Scenario sc = load_scenario(scenario);
        const auto start = std::chrono::steady_clock::now();
        const CommandResult r = run_command(command, sc, opt);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (json) {
            std::cout << to_json(r);
        } else {
            std::cout << to_text(r) << "time: " << secs << " s\n";
        }
        return r.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
