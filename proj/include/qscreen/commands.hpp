#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qscreen/csv.hpp"
#include "qscreen/dataset.hpp"
#include "qscreen/descriptors.hpp"
#include "qscreen/experiment.hpp"
#include "qscreen/features.hpp"
#include "qscreen/qkernel.hpp"
#include "qscreen/smiles.hpp"
#include "qscreen/version.hpp"

namespace qscreen {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Appends the 16 native descriptor columns to a CSV with a SMILES column.
/// Unparseable SMILES rows go to "<output>.rejects.csv" with parse positions.
inline int cmd_descriptors(const std::filesystem::path& input,
                           const std::filesystem::path& output,
                           const std::string& smiles_column = "smiles") {
    CsvTable table;
    std::size_t smiles_col = 0;
    try {
        table = read_csv(input);
        smiles_col = table.column_index(smiles_column);
    } catch (const std::exception& e) {
        std::cerr << "descriptors: " << e.what() << "\n";
        return kExitValidation;
    }

    CsvTable out;
    out.header = table.header;
    for (const std::string& name : descriptor_names()) out.header.push_back(name);
    CsvTable rejects;
    rejects.header = {"row", "smiles", "reason"};

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string& smiles = table.rows[r].size() > smiles_col ? table.rows[r][smiles_col] : "";
        try {
            const DescriptorVector d = compute_descriptors(parse_smiles(smiles));
            std::vector<std::string> row = table.rows[r];
            for (const double v : d.values()) row.push_back(format_double(v));
            out.rows.push_back(std::move(row));
        } catch (const SmilesError& e) {
            rejects.rows.push_back({std::to_string(r), smiles, e.what()});
        }
    }

    try {
        write_csv(output, out);
        std::filesystem::path rejects_path = output;
        rejects_path += ".rejects.csv";
        write_csv(rejects_path, rejects);
    } catch (const std::exception& e) {
        std::cerr << "descriptors: " << e.what() << "\n";
        return kExitRuntime;
    }
    std::cout << "descriptors: " << out.rows.size() << " rows written, " << rejects.rows.size()
              << " rejected\n";
    return kExitOk;
}

struct RunOverrides {
    std::optional<std::string> output_dir;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
};

namespace cmd_detail {

inline std::string branch_id(const ExperimentSummary& s) {
    if (s.branch == "csvc") return "csvc";
    return s.c_policy == "default" ? "qsvc_default_c" : "qsvc_tuned_c";
}

inline CsvTable results_table(const std::vector<ExperimentSummary>& summaries) {
    CsvTable t;
    t.header = {"target", "selector", "n_features", "branch",   "C_policy",
                "mode",   "shots",    "mean_auc",   "std_auc",  "n_repeats"};
    for (const ExperimentSummary& s : summaries)
        t.rows.push_back({s.target, s.selector, std::to_string(s.n_features), s.branch,
                          s.c_policy, s.mode, std::to_string(s.shots), format_double(s.mean_auc),
                          format_double(s.std_auc), std::to_string(s.aucs.size())});
    return t;
}

inline nlohmann::json summary_json(const ExperimentSummary& s) {
    nlohmann::json j;
    j["target"] = s.target;
    j["selector"] = s.selector;
    j["n_features"] = s.n_features;
    j["branch"] = s.branch;
    j["c_policy"] = s.c_policy;
    j["mode"] = s.mode;
    j["shots"] = s.shots;
    j["repeat_ids"] = s.repeat_ids;
    j["aucs"] = s.aucs;
    j["failed_repeats"] = s.failed_repeats;
    j["failure_reasons"] = s.failure_reasons;
    j["wall_seconds"] = s.wall_seconds;
    j["mean_auc"] = s.mean_auc;
    j["std_auc"] = s.std_auc;
    j["fingerprint"] = exp_detail::hex64(s.fingerprint);
    return j;
}

inline void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                          const std::vector<ExperimentSummary>& summaries,
                          const LoadReport& report, bool complete) {
    write_csv(dir / "results.csv", results_table(summaries));

    nlohmann::json results;
    results["complete"] = complete;
    results["results"] = nlohmann::json::array();
    for (const ExperimentSummary& s : summaries) results["results"].push_back(summary_json(s));
    write_file_atomic(dir / "results.json", results.dump(2) + "\n");

    nlohmann::json manifest;
    manifest["config_hash"] = exp_detail::hex64(config_hash(config));
    manifest["library_version"] = kVersion;
    manifest["dataset_path"] = config.dataset_path;
    manifest["master_seed"] = config.seed;
    std::vector<std::uint64_t> repeat_seeds;
    for (std::size_t r = 1; r <= config.repeats; ++r) repeat_seeds.push_back(config.seed + r);
    manifest["repeat_seeds"] = repeat_seeds;
    manifest["dropped_rows"] = report.dropped_rows;
    manifest["config"] = config_to_json(config);
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

    CsvTable rejects;
    rejects.header = {"row", "reason"};
    for (const RejectedRow& r : report.rejects)
        rejects.rows.push_back({std::to_string(r.row), r.reason});
    write_csv(dir / "rejects.csv", rejects);
}

} // namespace cmd_detail

/// Runs the experiment matrix described by a JSON config. Output lands in
/// <output_dir>/<config-hash>/: results.csv, results.json, manifest.json,
/// rejects.csv. Partial results are preserved when a cell fails mid-run.
inline int cmd_run(const std::filesystem::path& config_path, const RunOverrides& overrides = {}) {
    ExperimentConfig config;
    try {
        const std::string text = read_text_file(config_path);
        config = config_from_json(nlohmann::json::parse(text));
        if (overrides.output_dir) config.output_dir = *overrides.output_dir;
        if (overrides.threads) config.threads = *overrides.threads;
        if (overrides.seed) config.seed = *overrides.seed;
        validate_config(config);
    } catch (const std::exception& e) {
        std::cerr << "run: " << e.what() << "\n";
        return kExitValidation;
    }

    LoadReport report;
    try {
        LoadOptions load_opt;
        load_opt.label_column = config.label_column;
        load_opt.feature_columns = config.feature_columns;
        load_opt.positive_label = config.positive_label;
        load_opt.negative_label = config.negative_label;
        load_opt.smiles_column = config.smiles_column;
        report = load_csv(config.dataset_path, load_opt);
        for (const std::size_t n : config.feature_counts)
            if (n > report.dataset.features.cols())
                throw ConfigError("feature_counts",
                                  "requested " + std::to_string(n) + " features but dataset has " +
                                      std::to_string(report.dataset.features.cols()));
    } catch (const std::exception& e) {
        std::cerr << "run: " << e.what() << "\n";
        return kExitValidation;
    }

    const std::filesystem::path out_dir =
        std::filesystem::path(config.output_dir) / exp_detail::hex64(config_hash(config));
    std::vector<ExperimentSummary> summaries;
    bool complete = true;
    std::string failure;
    for (const std::string& selector : config.selectors) {
        for (const std::size_t n : config.feature_counts) {
            try {
                std::vector<ExperimentSummary> cell =
                    run_cell(report.dataset, config, selector, n);
                summaries.insert(summaries.end(), cell.begin(), cell.end());
            } catch (const std::exception& e) {
                complete = false;
                failure = std::string("cell (") + selector + ", " + std::to_string(n) +
                          " features): " + e.what();
            }
            if (!complete) break;
        }
        if (!complete) break;
    }

    try {
        cmd_detail::write_outputs(out_dir, config, summaries, report, complete);
    } catch (const std::exception& e) {
        std::cerr << "run: writing outputs failed: " << e.what() << "\n";
        return kExitRuntime;
    }
    if (!complete) {
        std::cerr << "run: " << failure << " (partial results in " << out_dir.string() << ")\n";
        return kExitRuntime;
    }
    std::cout << "run: results in " << out_dir.string() << "\n";
    return kExitOk;
}

/// Long-format table for one (target, selector): a row per curve point, the
/// mean/std strings copied verbatim from the results file.
inline int cmd_plotdata(const std::filesystem::path& results_csv, const std::string& target,
                        const std::string& selector, const std::filesystem::path& output) {
    CsvTable results;
    std::size_t target_col, selector_col, n_col, branch_col, policy_col, mean_col, std_col;
    try {
        results = read_csv(results_csv);
        target_col = results.column_index("target");
        selector_col = results.column_index("selector");
        n_col = results.column_index("n_features");
        branch_col = results.column_index("branch");
        policy_col = results.column_index("C_policy");
        mean_col = results.column_index("mean_auc");
        std_col = results.column_index("std_auc");
    } catch (const std::exception& e) {
        std::cerr << "plotdata: " << e.what() << "\n";
        return kExitValidation;
    }

    struct Point {
        std::string branch;
        long n_features;
        std::string mean, std;
    };
    std::vector<Point> points;
    for (const auto& row : results.rows) {
        if (row[target_col] != target || row[selector_col] != selector) continue;
        std::string branch = row[branch_col];
        if (branch == "qsvc")
            branch = row[policy_col] == "default" ? "qsvc_default_c" : "qsvc_tuned_c";
        points.push_back({branch, std::stol(row[n_col]), row[mean_col], row[std_col]});
    }
    if (points.empty()) {
        std::cerr << "plotdata: no rows match target '" << target << "' and selector '" << selector
                  << "'\n";
        return kExitValidation;
    }
    std::stable_sort(points.begin(), points.end(), [](const Point& a, const Point& b) {
        if (a.branch != b.branch) return a.branch < b.branch;
        return a.n_features < b.n_features;
    });

    CsvTable out;
    out.header = {"n_features", "branch", "mean_auc", "std_auc"};
    for (const Point& p : points)
        out.rows.push_back({std::to_string(p.n_features), p.branch, p.mean, p.std});
    try {
        write_csv(output, out);
    } catch (const std::exception& e) {
        std::cerr << "plotdata: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

struct KernelDumpOptions {
    std::string mode = "exact";  // exact | sampled
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    std::size_t depth = 2;
    bool angle_scale = false;            // map columns onto [0, pi] first
    std::vector<std::string> columns;    // empty = all columns
    std::string csv_out;                 // optional readable dump
    unsigned threads = 1;
};

/// Dumps the self-Gram of a numeric feature CSV in the QKM1 binary format.
inline int cmd_kernel(const std::filesystem::path& input, const std::filesystem::path& output,
                      const KernelDumpOptions& opt = {}) {
    if (opt.mode != "exact" && opt.mode != "sampled") {
        std::cerr << "kernel: mode must be 'exact' or 'sampled'\n";
        return kExitValidation;
    }
    if (opt.mode == "sampled" && opt.shots == 0) {
        std::cerr << "kernel: sampled mode needs --shots\n";
        return kExitValidation;
    }

    Matrix x;
    try {
        const CsvTable table = read_csv(input);
        std::vector<std::size_t> cols;
        if (opt.columns.empty())
            for (std::size_t c = 0; c < table.header.size(); ++c) cols.push_back(c);
        else
            for (const std::string& name : opt.columns) cols.push_back(table.column_index(name));
        if (cols.size() > kMaxQubits) throw std::runtime_error("more than 24 feature columns");

        std::vector<std::vector<double>> rows;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            std::vector<double> row;
            for (const std::size_t c : cols) {
                double v;
                if (!ds_detail::parse_finite(table.rows[r][c], v))
                    throw std::runtime_error("row " + std::to_string(r) + ", column '" +
                                             table.header[c] + "': not a finite number");
                row.push_back(v);
            }
            rows.push_back(std::move(row));
        }
        if (rows.empty()) throw std::runtime_error("no data rows");
        x = Matrix::from_rows(rows);
        if (opt.angle_scale) x = angle_apply(angle_fit(x), x);
    } catch (const std::exception& e) {
        std::cerr << "kernel: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        FeatureMapSpec spec;
        spec.n_qubits = x.cols();
        spec.depth = opt.depth;
        GramOptions gram_opt;
        gram_opt.mode = opt.mode == "sampled" ? KernelMode::Sampled : KernelMode::Exact;
        gram_opt.shots = opt.shots;
        gram_opt.seed = opt.seed;
        gram_opt.threads = opt.threads;
        const KernelMatrix km = gram_matrix(x, spec, gram_opt);
        write_qkm(output, km);
        if (!opt.csv_out.empty()) write_kernel_csv(opt.csv_out, km);
    } catch (const std::exception& e) {
        std::cerr << "kernel: " << e.what() << "\n";
        return kExitRuntime;
    }
    std::cout << "kernel: " << x.rows() << "x" << x.rows() << " Gram written to "
              << output.string() << "\n";
    return kExitOk;
}

} // namespace qscreen
