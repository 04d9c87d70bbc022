#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iga/cli.hpp"
#include "iga/errors.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

// "--key value" and "--key=value" pairs left over by the parser; hyphens in
// keys map to underscores.
void apply_overrides(iga::KeyValueConfig& config, const std::vector<std::string>& extras) {
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& arg = extras[i];
        if (arg.rfind("--", 0) != 0 || arg.size() == 2) throw iga::ConfigError("unexpected argument '" + arg + "'");
        std::string key = arg.substr(2), value;
        if (const auto eq = key.find('='); eq != std::string::npos) {
            value = key.substr(eq + 1);
            key.resize(eq);
        } else {
            if (i + 1 >= extras.size()) throw iga::ConfigError("--" + key + ": missing value");
            value = extras[++i];
        }
        for (char& c : key)
            if (c == '-') c = '_';
        if (value.empty()) throw iga::ConfigError("--" + key + ": empty value");
        config.set(key, value, "--" + key);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explicit dynamics with approximate dual spline bases: experiment driver"};
    app.require_subcommand(1);
    std::string config_path;
    const std::pair<const char*, const char*> commands[] = {
        {"spectrum", "string frequency spectra of consistent, customized and lumped mass"},
        {"annulus", "free vibration of the annular membrane over one period"},
        {"project", "quasi-projection errors for polynomials and sin(pi x)"},
        {"stability", "largest frequencies and critical time steps"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "flat key = value configuration file")->required();
        sub->allow_extras();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        const auto* sub = app.get_subcommands().front();
        const auto experiment = iga::parse_experiment(sub->get_name());
        auto config = iga::KeyValueConfig::load(config_path);
        apply_overrides(config, sub->remaining());
        const auto run = iga::make_run_config(experiment, config);
        for (const auto& path : iga::run_experiment(run)) std::cout << path.string() << '\n';
    } catch (const iga::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const iga::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
