#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qscreen/dataset.hpp"
#include "qscreen/eval.hpp"
#include "qscreen/features.hpp"
#include "qscreen/matrix.hpp"
#include "qscreen/qkernel.hpp"
#include "qscreen/svm.hpp"
#include "qscreen/version.hpp"

namespace qscreen {

/// Config schema violation; `field` names the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& message)
        : std::runtime_error("config field '" + field + "': " + message), field_(field) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct ExperimentConfig {
    std::string dataset_path;
    std::string target;  // free-text label for result rows
    std::string label_column = "label";
    std::string smiles_column = "smiles";
    std::vector<std::string> feature_columns;  // empty = all
    std::string positive_label = "1";
    std::string negative_label = "0";
    std::vector<std::string> selectors = {"pca", "anova"};
    std::vector<std::size_t> feature_counts = {2, 4, 8};
    std::vector<std::string> branches = {"csvc", "qsvc_default_c", "qsvc_tuned_c"};
    std::string kernel_mode = "exact";  // exact | sampled
    std::uint64_t shots = 0;            // required (> 0) iff sampled
    std::size_t depth = 2;
    std::size_t repeats = 10;
    std::uint64_t seed = 1234;
    double train_fraction = 0.8;
    double default_c = 1.0;
    std::size_t cv_folds = 5;
    std::string protocol = "resample";  // resample | kfold
    bool balance_after_split = false;   // leakage-free variant: balance train only
    std::string balance_mode = "auto";  // auto | one_to_one | one_to_six
    std::size_t balance_threshold = 30;
    GridSpec grid;
    std::string output_dir = "qscreen-out";
    unsigned threads = 1;
};

namespace exp_detail {

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return out;
}

inline std::string kernel_spec_id(const KernelSpec& s) { return kernel_name(s); }

inline KernelSpec kernel_spec_from_id(const std::string& id) {
    if (id == "linear") return {KernelKind::Linear, 1, 1.0, 1.0};
    if (id == "rbf") return {KernelKind::Rbf, 1, 1.0, 1.0};
    if (id.rfind("poly", 0) == 0) {
        const int degree = id.size() > 4 ? std::stoi(id.substr(4)) : 3;
        if (degree < 1) throw ConfigError("grid.kernels", "poly degree must be >= 1");
        return {KernelKind::Poly, degree, 1.0, 1.0};
    }
    throw ConfigError("grid.kernels", "unknown kernel '" + id + "'");
}

} // namespace exp_detail

inline void validate_config(const ExperimentConfig& c) {
    if (c.dataset_path.empty()) throw ConfigError("dataset_path", "required");
    if (c.selectors.empty()) throw ConfigError("selectors", "must not be empty");
    for (const auto& s : c.selectors)
        if (s != "pca" && s != "anova")
            throw ConfigError("selectors", "unknown selector '" + s + "'");
    if (c.feature_counts.empty()) throw ConfigError("feature_counts", "must not be empty");
    for (const std::size_t n : c.feature_counts) {
        if (n == 0) throw ConfigError("feature_counts", "feature counts must be >= 1");
        if (n > kMaxQubits)
            throw ConfigError("feature_counts", "feature counts above 24 are not supported");
    }
    if (c.branches.empty()) throw ConfigError("branches", "must not be empty");
    for (const auto& b : c.branches)
        if (b != "csvc" && b != "qsvc_default_c" && b != "qsvc_tuned_c")
            throw ConfigError("branches", "unknown branch '" + b + "'");
    if (c.kernel_mode != "exact" && c.kernel_mode != "sampled")
        throw ConfigError("kernel_mode", "must be 'exact' or 'sampled'");
    if (c.kernel_mode == "sampled" && c.shots == 0)
        throw ConfigError("shots", "required (> 0) when kernel_mode is 'sampled'");
    if (c.kernel_mode == "exact" && c.shots != 0)
        throw ConfigError("shots", "only allowed when kernel_mode is 'sampled'");
    if (c.depth < 1) throw ConfigError("depth", "must be >= 1");
    if (c.repeats < 1) throw ConfigError("repeats", "must be >= 1");
    if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
        throw ConfigError("train_fraction", "must be in (0,1)");
    if (!(c.default_c > 0.0)) throw ConfigError("default_c", "must be > 0");
    if (c.cv_folds < 2) throw ConfigError("cv_folds", "must be >= 2");
    if (c.protocol != "resample" && c.protocol != "kfold")
        throw ConfigError("protocol", "must be 'resample' or 'kfold'");
    if (c.balance_mode != "auto" && c.balance_mode != "one_to_one" && c.balance_mode != "one_to_six")
        throw ConfigError("balance_mode", "must be 'auto', 'one_to_one' or 'one_to_six'");
    if (c.balance_threshold == 0) throw ConfigError("balance_threshold", "must be >= 1");
    if (c.grid.c_values.empty()) throw ConfigError("grid.c_values", "must not be empty");
    for (const double v : c.grid.c_values)
        if (!(v > 0.0)) throw ConfigError("grid.c_values", "C values must be > 0");
    for (const double v : c.grid.gamma_values)
        if (!(v > 0.0)) throw ConfigError("grid.gamma_values", "gamma values must be > 0");
    if (c.output_dir.empty()) throw ConfigError("output_dir", "required");
    if (c.threads == 0) throw ConfigError("threads", "must be >= 1");
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["dataset_path"] = c.dataset_path;
    j["target"] = c.target;
    j["label_column"] = c.label_column;
    j["smiles_column"] = c.smiles_column;
    j["feature_columns"] = c.feature_columns;
    j["positive_label"] = c.positive_label;
    j["negative_label"] = c.negative_label;
    j["selectors"] = c.selectors;
    j["feature_counts"] = c.feature_counts;
    j["branches"] = c.branches;
    j["kernel_mode"] = c.kernel_mode;
    j["shots"] = c.shots;
    j["depth"] = c.depth;
    j["repeats"] = c.repeats;
    j["seed"] = c.seed;
    j["train_fraction"] = c.train_fraction;
    j["default_c"] = c.default_c;
    j["cv_folds"] = c.cv_folds;
    j["protocol"] = c.protocol;
    j["balance_after_split"] = c.balance_after_split;
    j["balance_mode"] = c.balance_mode;
    j["balance_threshold"] = c.balance_threshold;
    j["grid"]["c_values"] = c.grid.c_values;
    j["grid"]["gamma_values"] = c.grid.gamma_values;
    nlohmann::json kernels = nlohmann::json::array();
    for (const KernelSpec& k : c.grid.kernels) kernels.push_back(exp_detail::kernel_spec_id(k));
    j["grid"]["kernels"] = kernels;
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    const auto read = [&j](const char* field, auto& into) {
        if (!j.contains(field)) return;
        try {
            j.at(field).get_to(into);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(field, e.what());
        }
    };
    read("dataset_path", c.dataset_path);
    read("target", c.target);
    read("label_column", c.label_column);
    read("smiles_column", c.smiles_column);
    read("feature_columns", c.feature_columns);
    read("positive_label", c.positive_label);
    read("negative_label", c.negative_label);
    read("selectors", c.selectors);
    read("feature_counts", c.feature_counts);
    read("branches", c.branches);
    read("kernel_mode", c.kernel_mode);
    read("shots", c.shots);
    read("depth", c.depth);
    read("repeats", c.repeats);
    read("seed", c.seed);
    read("train_fraction", c.train_fraction);
    read("default_c", c.default_c);
    read("cv_folds", c.cv_folds);
    read("protocol", c.protocol);
    read("balance_after_split", c.balance_after_split);
    read("balance_mode", c.balance_mode);
    read("balance_threshold", c.balance_threshold);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        if (!g.is_object()) throw ConfigError("grid", "must be an object");
        try {
            if (g.contains("c_values")) g.at("c_values").get_to(c.grid.c_values);
            if (g.contains("gamma_values")) g.at("gamma_values").get_to(c.grid.gamma_values);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("grid", e.what());
        }
        if (g.contains("kernels")) {
            c.grid.kernels.clear();
            for (const auto& id : g.at("kernels")) {
                if (!id.is_string()) throw ConfigError("grid.kernels", "entries must be strings");
                c.grid.kernels.push_back(exp_detail::kernel_spec_from_id(id.get<std::string>()));
            }
        }
    }
    read("output_dir", c.output_dir);
    read("threads", c.threads);
    validate_config(c);
    return c;
}

/// Hash of the canonical (sorted-key) config rendering; names the output
/// directory and fingerprints every result row.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
    return exp_detail::fnv1a64(config_to_json(c).dump());
}

/// Aggregated outcome of one (selector, feature count, branch) cell.
struct ExperimentSummary {
    std::string target;
    std::string selector;
    std::size_t n_features = 0;
    std::string branch;    // csvc | qsvc
    std::string c_policy;  // grid | default | tuned
    std::string mode;      // exact | sampled
    std::uint64_t shots = 0;
    std::vector<std::size_t> repeat_ids;  // successful repeats (1-based)
    std::vector<double> aucs;             // aligned with repeat_ids
    std::vector<std::size_t> failed_repeats;
    std::vector<std::string> failure_reasons;
    std::vector<double> wall_seconds;  // per repeat (1..R), failures included
    double mean_auc = 0.0;
    double std_auc = 0.0;
    std::uint64_t fingerprint = 0;
};

namespace exp_detail {

struct BranchPlan {
    std::string id;        // config branch name
    std::string branch;    // csvc | qsvc
    std::string c_policy;  // grid | default | tuned
};

inline BranchPlan branch_plan(const std::string& id) {
    if (id == "csvc") return {id, "csvc", "grid"};
    if (id == "qsvc_default_c") return {id, "qsvc", "default"};
    return {id, "qsvc", "tuned"};
}

inline BalancePolicy balance_policy(const ExperimentConfig& c, std::uint64_t seed) {
    BalancePolicy p;
    p.mode = c.balance_mode == "one_to_one" ? BalanceMode::OneToOneDownsample
             : c.balance_mode == "one_to_six" ? BalanceMode::OneToSixPadding
                                              : BalanceMode::Auto;
    p.active_threshold = c.balance_threshold;
    p.seed = seed;
    return p;
}

} // namespace exp_detail

/// One experiment cell: every configured branch evaluated over R repeats of
/// balance -> stratified 80/20 split -> fit pipeline on train -> train/score.
/// QSVC Gram matrices are computed once per repeat and shared between the
/// default-C and tuned-C policies. A repeat that throws is recorded and
/// excluded from the mean, never silently averaged.
inline std::vector<ExperimentSummary> run_cell(const LabeledDataset& ds,
                                               const ExperimentConfig& config,
                                               const std::string& selector,
                                               std::size_t n_features) {
    const std::uint64_t fingerprint = config_hash(config);
    std::vector<exp_detail::BranchPlan> plans;
    bool want_csvc = false, want_q_default = false, want_q_tuned = false;
    for (const std::string& b : config.branches) {
        plans.push_back(exp_detail::branch_plan(b));
        want_csvc |= b == "csvc";
        want_q_default |= b == "qsvc_default_c";
        want_q_tuned |= b == "qsvc_tuned_c";
    }
    const bool need_grid = want_csvc || want_q_tuned;
    const bool need_quantum = want_q_default || want_q_tuned;

    std::vector<ExperimentSummary> out;
    for (const auto& plan : plans) {
        ExperimentSummary s;
        s.target = config.target;
        s.selector = selector;
        s.n_features = n_features;
        s.branch = plan.branch;
        s.c_policy = plan.c_policy;
        s.mode = config.kernel_mode;
        s.shots = config.kernel_mode == "sampled" ? config.shots : 0;
        s.fingerprint = fingerprint;
        out.push_back(std::move(s));
    }

    const bool sampled = config.kernel_mode == "sampled";
    const Selector sel = selector_from_name(selector);

    // kfold protocol: one stratified partition, repeat r holds out fold r
    std::vector<FoldIndices> protocol_folds;
    LabeledDataset kfold_base;
    if (config.protocol == "kfold") {
        kfold_base = config.balance_after_split
                         ? ds
                         : balance(ds, exp_detail::balance_policy(config, config.seed));
        protocol_folds = kfold(kfold_base, config.repeats, config.seed);
    }

    for (std::size_t r = 1; r <= config.repeats; ++r) {
        const std::uint64_t seed_r = config.seed + r;
        const auto started = std::chrono::steady_clock::now();
        try {
            LabeledDataset train, test;
            if (config.protocol == "kfold") {
                const FoldIndices& fold = protocol_folds[r - 1];
                train = subset(kfold_base, fold.train);
                test = subset(kfold_base, fold.validation);
                if (config.balance_after_split)
                    train = balance(train, exp_detail::balance_policy(config, seed_r));
            } else if (config.balance_after_split) {
                std::tie(train, test) = stratified_split(ds, config.train_fraction, seed_r);
                train = balance(train, exp_detail::balance_policy(config, seed_r));
            } else {
                const LabeledDataset working =
                    balance(ds, exp_detail::balance_policy(config, seed_r));
                std::tie(train, test) = stratified_split(working, config.train_fraction, seed_r);
            }
            if (test.size() == 0) throw std::runtime_error("empty test split");

            const FeaturePipeline pipeline =
                pipeline_fit(train.features, train.labels, sel, n_features);
            if (pipeline.train_fingerprint == matrix_fingerprint(test.features, test.labels))
                throw std::logic_error("pipeline fitted on test rows");

            const Matrix xc_train = pipeline_features(pipeline, train.features);
            const Matrix xc_test = pipeline_features(pipeline, test.features);

            GridResult tuned;
            if (need_grid)
                tuned = grid_search(xc_train, train.labels, config.grid, config.cv_folds, seed_r);

            double auc_csvc = 0.0, auc_q_default = 0.0, auc_q_tuned = 0.0;
            if (want_csvc) {
                const DualSolution dual =
                    smo_train(classical_gram(tuned.kernel, xc_train, xc_train), train.labels,
                              tuned.c);
                TrainedSvcModel model;
                model.dual = dual;
                model.labels = train.labels;
                model.train_inputs = xc_train;
                model.kernel = tuned.kernel;
                model.preprocessing_ref = exp_detail::hex64(pipeline.train_fingerprint);
                auc_csvc = roc_auc(test.labels, svc_scores(model, xc_test));
            }
            if (need_quantum) {
                const Matrix xq_train = angle_apply(pipeline.angles, xc_train);
                const Matrix xq_test = angle_apply(pipeline.angles, xc_test);
                FeatureMapSpec map_spec;
                map_spec.n_qubits = n_features;
                map_spec.depth = config.depth;
                GramOptions gram_opt;
                gram_opt.mode = sampled ? KernelMode::Sampled : KernelMode::Exact;
                gram_opt.shots = config.shots;
                gram_opt.seed = seed_r;
                gram_opt.psd_repair = sampled;
                gram_opt.threads = config.threads;
                gram_opt.stream_salt = 0;
                const KernelMatrix k_train = gram_matrix(xq_train, map_spec, gram_opt);
                gram_opt.stream_salt = 1;
                const KernelMatrix k_test = gram_matrix(xq_test, xq_train, map_spec, gram_opt);

                const auto qsvc_auc = [&](double c_value) {
                    TrainedSvcModel model;
                    model.dual = smo_train(k_train.values, train.labels, c_value);
                    model.labels = train.labels;
                    model.kernel = {KernelKind::Precomputed, 1, 1.0, 1.0};
                    model.preprocessing_ref = exp_detail::hex64(pipeline.train_fingerprint);
                    return roc_auc(test.labels, decision_function(model, k_test.values));
                };
                if (want_q_default) auc_q_default = qsvc_auc(config.default_c);
                if (want_q_tuned) auc_q_tuned = qsvc_auc(tuned.c);
            }

            for (std::size_t p = 0; p < plans.size(); ++p) {
                out[p].repeat_ids.push_back(r);
                if (plans[p].id == "csvc") out[p].aucs.push_back(auc_csvc);
                else if (plans[p].id == "qsvc_default_c") out[p].aucs.push_back(auc_q_default);
                else out[p].aucs.push_back(auc_q_tuned);
            }
        } catch (const std::exception& e) {
            for (auto& summary : out) {
                summary.failed_repeats.push_back(r);
                summary.failure_reasons.push_back(e.what());
            }
        }
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
        for (auto& summary : out) summary.wall_seconds.push_back(elapsed.count());
    }

    for (auto& summary : out) {
        const MeanStd ms = mean_std(summary.aucs);
        summary.mean_auc = ms.mean;
        summary.std_auc = ms.stddev;
    }
    return out;
}

struct ExperimentOutput {
    std::vector<ExperimentSummary> summaries;
    LoadReport load_report;
    std::uint64_t config_fingerprint = 0;
};

inline ExperimentOutput run_experiment(const ExperimentConfig& config) {
    validate_config(config);
    ExperimentOutput out;
    out.config_fingerprint = config_hash(config);

    LoadOptions load_opt;
    load_opt.label_column = config.label_column;
    load_opt.feature_columns = config.feature_columns;
    load_opt.positive_label = config.positive_label;
    load_opt.negative_label = config.negative_label;
    load_opt.smiles_column = config.smiles_column;
    out.load_report = load_csv(config.dataset_path, load_opt);
    const LabeledDataset& ds = out.load_report.dataset;

    for (const std::size_t n : config.feature_counts)
        if (n > ds.features.cols())
            throw ConfigError("feature_counts",
                              "requested " + std::to_string(n) + " features but dataset has " +
                                  std::to_string(ds.features.cols()));

    for (const std::string& selector : config.selectors)
        for (const std::size_t n : config.feature_counts) {
            std::vector<ExperimentSummary> cell = run_cell(ds, config, selector, n);
            out.summaries.insert(out.summaries.end(), cell.begin(), cell.end());
        }
    return out;
}

} // namespace qscreen
