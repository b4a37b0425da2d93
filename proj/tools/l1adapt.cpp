#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "l1adapt/cli.hpp"

namespace {

std::optional<std::string> opt_path(const std::string& s) {
    return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

} // namespace

int main(int argc, char** argv) {
    using namespace l1adapt;
    CLI::App app{"Simulation and certification of L1 adaptive controllers"};
    app.require_subcommand(1);

    std::string scenario;
    std::string out;

    auto* certify = app.add_subcommand("certify", "Compute the stability certificate and performance bounds");
    certify->add_option("scenario", scenario, "Scenario file")->required();

    cli::SimulateOptions sim_opts;
    auto* simulate = app.add_subcommand("simulate", "Simulate the closed loop and check the bounds");
    simulate->add_option("scenario", scenario, "Scenario file")->required();
    simulate->add_flag("--with-reference", sim_opts.with_reference, "Co-simulate the closed-loop reference system");
    simulate->add_flag("--unsafe", sim_opts.unsafe, "Simulate even if the certificate fails");
    simulate->add_option("--out", out, "Trace CSV path");

    std::string wk_range = "5:100:96";
    auto* fig2 = app.add_subcommand("fig2", "L1-gain condition value against omega*k");
    fig2->add_option("scenario", scenario, "Scenario file")->required();
    fig2->add_option("--wk-range", wk_range, "lo:hi:steps")->capture_default_str();
    fig2->add_option("--out", out, "Curve CSV path");

    std::vector<double> gammas{1e2, 1e3, 1e4, 1e5};
    auto* sweep = app.add_subcommand("sweep-gamma", "Adaptation-gain sweep with reference co-simulation");
    sweep->add_option("scenario", scenario, "Scenario file")->required();
    sweep->add_option("--gammas", gammas, "Adaptation gains")->delimiter(',')->capture_default_str();
    sweep->add_option("--out", out, "Sweep CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*certify) return cli::cmd_certify(scenario, std::cout, std::cerr);
        if (*simulate) {
            sim_opts.out_path = opt_path(out);
            return cli::cmd_simulate(scenario, sim_opts, std::cout, std::cerr);
        }
        if (*fig2) return cli::cmd_fig2(scenario, cli::parse_wk_range(wk_range), opt_path(out), std::cout, std::cerr);
        if (*sweep) return cli::cmd_sweep_gamma(scenario, gammas, opt_path(out), std::cout, std::cerr);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return e.code() == Errc::Diverged ? cli::kExitDiverged : cli::kExitFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitFailed;
    }
    return cli::kExitFailed;
}
