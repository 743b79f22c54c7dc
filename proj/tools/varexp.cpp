// Command-line front end: solve, sweep, verify and oracle over an INI config.
#include "varexp/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

varexp::RunConfig load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw varexp::ConfigError("cannot read config " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return varexp::parse_config(text.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Positive solutions of a variable-exponent concave-convex Dirichlet problem"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    int threads = 1;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides [output] directory)");
        sub->add_option("--seed", seed, "random seed (overrides [solver] seed)");
        sub->add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    };
    CLI::App* solve = app.add_subcommand("solve", "catalogue solutions at one lambda");
    CLI::App* sweep = app.add_subcommand("sweep", "bifurcation diagram over a lambda grid");
    CLI::App* verify = app.add_subcommand("verify", "run the property suites");
    CLI::App* oracle = app.add_subcommand("oracle", "1D shooting reference solutions");
    for (CLI::App* sub : {solve, sweep, verify, oracle}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        const varexp::RunConfig config = load(config_path);
        varexp::CommandContext ctx;
        CLI::App* chosen = app.get_subcommands().front();
        if (chosen->count("--out")) ctx.out = out;
        if (chosen->count("--seed")) ctx.seed = seed;
        ctx.threads = threads;
        if (*solve) return varexp::cmd_solve(config, ctx);
        if (*sweep) return varexp::cmd_sweep(config, ctx);
        if (*verify) return varexp::cmd_verify(config, ctx);
        return varexp::cmd_oracle(config, ctx);
    } catch (const varexp::ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
