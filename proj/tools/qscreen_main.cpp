#include <cstdint>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qscreen/commands.hpp"
#include "qscreen/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"qscreen: quantum-kernel vs classical-kernel virtual screening"};
    app.set_version_flag("--version", std::string(qscreen::kVersion));
    app.require_subcommand(1);

    auto* descriptors = app.add_subcommand(
        "descriptors", "Append the 16 native molecular descriptors to a CSV with SMILES");
    std::string d_input, d_output, d_smiles_column = "smiles";
    descriptors->add_option("--input,-i", d_input, "input CSV")->required();
    descriptors->add_option("--out,-o", d_output, "output CSV")->required();
    descriptors->add_option("--smiles-column", d_smiles_column, "SMILES column name");

    auto* run = app.add_subcommand("run", "Run the experiment matrix described by a JSON config");
    std::string r_config;
    std::string r_out;
    unsigned r_threads = 0;
    std::uint64_t r_seed = 0;
    bool r_have_seed = false;
    run->add_option("--config,-c", r_config, "experiment config (JSON)")->required();
    run->add_option("--out,-o", r_out, "override output directory");
    run->add_option("--threads", r_threads, "override worker thread count");
    run->add_option("--seed", r_seed, "override master seed")->each([&](const std::string&) {
        r_have_seed = true;
    });

    auto* plotdata =
        app.add_subcommand("plotdata", "Export tidy per-curve rows from a results.csv");
    std::string p_results, p_target, p_selector, p_output;
    plotdata->add_option("--results,-r", p_results, "results.csv path")->required();
    plotdata->add_option("--target", p_target, "target name filter")->required();
    plotdata->add_option("--selector", p_selector, "selector filter (pca|anova)")->required();
    plotdata->add_option("--out,-o", p_output, "output CSV")->required();

    auto* kernel =
        app.add_subcommand("kernel", "Dump the quantum self-Gram of a feature CSV (QKM1)");
    std::string k_input, k_output;
    qscreen::KernelDumpOptions k_opt;
    kernel->add_option("--input,-i", k_input, "numeric feature CSV")->required();
    kernel->add_option("--out,-o", k_output, "output .qkm file")->required();
    kernel->add_option("--mode", k_opt.mode, "exact|sampled");
    kernel->add_option("--shots", k_opt.shots, "shots for sampled mode");
    kernel->add_option("--seed", k_opt.seed, "sampling seed");
    kernel->add_option("--depth", k_opt.depth, "feature-map depth");
    kernel->add_flag("--angle-scale", k_opt.angle_scale, "map columns onto [0, pi] first");
    kernel->add_option("--columns", k_opt.columns, "feature columns (default: all)");
    kernel->add_option("--csv", k_opt.csv_out, "also write a readable CSV dump");
    kernel->add_option("--threads", k_opt.threads, "worker thread count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? qscreen::kExitOk : qscreen::kExitValidation;
    }

    if (descriptors->parsed()) return qscreen::cmd_descriptors(d_input, d_output, d_smiles_column);
    if (run->parsed()) {
        qscreen::RunOverrides overrides;
        if (!r_out.empty()) overrides.output_dir = r_out;
        if (r_threads > 0) overrides.threads = r_threads;
        if (r_have_seed) overrides.seed = r_seed;
        return qscreen::cmd_run(r_config, overrides);
    }
    if (plotdata->parsed())
        return qscreen::cmd_plotdata(p_results, p_target, p_selector, p_output);
    if (kernel->parsed()) return qscreen::cmd_kernel(k_input, k_output, k_opt);
    return qscreen::kExitValidation;
}
