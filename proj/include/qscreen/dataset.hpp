#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qscreen/csv.hpp"
#include "qscreen/descriptors.hpp"
#include "qscreen/matrix.hpp"
#include "qscreen/rng.hpp"
#include "qscreen/smiles.hpp"

namespace qscreen {

struct LabeledDataset {
    std::vector<std::string> ids;
    std::vector<std::string> feature_names;
    Matrix features;
    std::vector<int> labels;  // +1 active, -1 inactive
    std::string source;

    std::size_t size() const { return labels.size(); }
};

inline LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> idx) {
    LabeledDataset out;
    out.feature_names = ds.feature_names;
    out.source = ds.source;
    out.features = ds.features.select_rows(idx);
    out.ids.reserve(idx.size());
    out.labels.reserve(idx.size());
    for (const std::size_t i : idx) {
        out.ids.push_back(ds.ids[i]);
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

struct RejectedRow {
    std::size_t row = 0;  // 0-based data row in the source file
    std::string reason;
};

struct LoadOptions {
    std::string label_column = "label";
    std::vector<std::string> feature_columns;  // empty = all except label/id/smiles
    std::string positive_label = "1";
    std::string negative_label = "0";
    std::string id_column = "id";
    std::string smiles_column = "smiles";
    bool use_smiles_descriptors = true;  // append the 16 native descriptors when present
};

struct LoadReport {
    LabeledDataset dataset;
    std::size_t dropped_rows = 0;
    std::vector<RejectedRow> rejects;
};

namespace ds_detail {

inline bool parse_finite(const std::string& field, double& out) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
    if (begin == end) return false;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) return false;
    return std::isfinite(out);
}

} // namespace ds_detail

/// Reads a labeled molecule table. Rows with unparseable or non-finite
/// numerics (or, in the SMILES flow, unparseable SMILES) are dropped and
/// counted. Label values must match the configured two-value mapping.
inline LoadReport load_csv(const std::filesystem::path& path, const LoadOptions& opt = {}) {
    const CsvTable table = read_csv(path);
    const std::size_t label_col = table.column_index(opt.label_column);
    const bool has_id = table.has_column(opt.id_column);
    const std::size_t id_col = has_id ? table.column_index(opt.id_column) : 0;
    const bool smiles_flow =
        opt.use_smiles_descriptors && table.has_column(opt.smiles_column);
    const std::size_t smiles_col = smiles_flow ? table.column_index(opt.smiles_column) : 0;

    std::vector<std::size_t> feature_cols;
    if (!opt.feature_columns.empty()) {
        for (const std::string& name : opt.feature_columns)
            feature_cols.push_back(table.column_index(name));
    } else {
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (c == label_col) continue;
            if (has_id && c == id_col) continue;
            if (smiles_flow && c == smiles_col) continue;
            feature_cols.push_back(c);
        }
    }

    LoadReport report;
    LabeledDataset& ds = report.dataset;
    ds.source = path.string();
    for (const std::size_t c : feature_cols) ds.feature_names.push_back(table.header[c]);
    if (smiles_flow)
        for (const std::string& name : descriptor_names()) ds.feature_names.push_back(name);

    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size()) {
            report.rejects.push_back({r, "field count does not match header"});
            continue;
        }
        const std::string& label_raw = row[label_col];
        int label;
        if (label_raw == opt.positive_label) label = 1;
        else if (label_raw == opt.negative_label) label = -1;
        else
            throw std::runtime_error("load_csv: label value '" + label_raw +
                                     "' not covered by the configured mapping");

        std::vector<double> values;
        values.reserve(ds.feature_names.size());
        bool ok = true;
        for (const std::size_t c : feature_cols) {
            double v;
            if (!ds_detail::parse_finite(row[c], v)) {
                report.rejects.push_back(
                    {r, "column '" + table.header[c] + "': not a finite number"});
                ok = false;
                break;
            }
            values.push_back(v);
        }
        if (ok && smiles_flow) {
            try {
                const DescriptorVector d = compute_descriptors(parse_smiles(row[smiles_col]));
                for (const double v : d.values()) values.push_back(v);
            } catch (const SmilesError& e) {
                report.rejects.push_back({r, std::string("smiles: ") + e.what()});
                ok = false;
            }
        }
        if (!ok) continue;
        ds.ids.push_back(has_id ? row[id_col] : std::to_string(r));
        ds.labels.push_back(label);
        rows.push_back(std::move(values));
    }
    report.dropped_rows = report.rejects.size();
    ds.features = Matrix::from_rows(rows);

    std::size_t n_pos = 0, n_neg = 0;
    for (const int y : ds.labels) (y > 0 ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0)
        throw std::runtime_error("load_csv: single-class file, cannot train a binary classifier");
    return report;
}

enum class BalanceMode { Auto, OneToOneDownsample, OneToSixPadding };

/// Auto picks by active count: >= active_threshold downsamples inactives 1:1,
/// below it pads to a 1:6 ratio (capped at the available inactives). The
/// explicit modes force one rule regardless of the count.
struct BalancePolicy {
    BalanceMode mode = BalanceMode::Auto;
    std::size_t active_threshold = 30;
    std::uint64_t seed = 0;
};

inline LabeledDataset balance(const LabeledDataset& ds, const BalancePolicy& policy) {
    if (policy.active_threshold == 0)
        throw std::invalid_argument("balance: active_threshold must be positive");
    std::vector<std::size_t> actives, inactives;
    for (std::size_t i = 0; i < ds.size(); ++i)
        (ds.labels[i] > 0 ? actives : inactives).push_back(i);
    if (actives.empty() || inactives.empty())
        throw std::invalid_argument("balance: dataset must contain both classes");

    BalanceMode mode = policy.mode;
    if (mode == BalanceMode::Auto)
        mode = actives.size() >= policy.active_threshold ? BalanceMode::OneToOneDownsample
                                                         : BalanceMode::OneToSixPadding;
    const std::size_t target =
        mode == BalanceMode::OneToOneDownsample ? actives.size() : 6 * actives.size();

    Rng rng(policy.seed);
    rng.shuffle(inactives);
    inactives.resize(std::min(target, inactives.size()));

    std::vector<std::size_t> keep = actives;
    keep.insert(keep.end(), inactives.begin(), inactives.end());
    rng.shuffle(keep);
    return subset(ds, keep);
}

namespace ds_detail {

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> class_indices(
    const std::vector<int>& labels) {
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] > 0 ? out.first : out.second).push_back(i);
    return out;
}

} // namespace ds_detail

/// Per-class train counts are round(train_fraction * class size), half up;
/// the remainder goes to the test side. Row order within each part is the
/// original (ascending index) order.
inline std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& ds,
                                                                  double train_fraction,
                                                                  std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("stratified_split: fraction must be in (0,1)");
    auto [pos, neg] = ds_detail::class_indices(ds.labels);
    if (pos.size() < 2 || neg.size() < 2)
        throw std::invalid_argument("stratified_split: class too small to split");

    Rng rng(seed);
    std::vector<std::size_t> train, test;
    for (std::vector<std::size_t>* cls : {&pos, &neg}) {
        rng.shuffle(*cls);
        const auto n_train = static_cast<std::size_t>(
            std::floor(train_fraction * static_cast<double>(cls->size()) + 0.5));
        train.insert(train.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(n_train));
        test.insert(test.end(), cls->begin() + static_cast<std::ptrdiff_t>(n_train), cls->end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {subset(ds, train), subset(ds, test)};
}

struct FoldIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Stratified k-fold over a label vector: per-class seeded shuffle, then
/// round-robin dealing, so per-class fold sizes differ by at most 1.
inline std::vector<FoldIndices> stratified_folds(const std::vector<int>& labels, std::size_t k,
                                                 std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold: k must be >= 2");
    auto [pos, neg] = ds_detail::class_indices(labels);
    if (pos.size() < k || neg.size() < k)
        throw std::invalid_argument("kfold: k exceeds class size");

    Rng rng(seed);
    std::vector<FoldIndices> folds(k);
    for (std::vector<std::size_t>* cls : {&pos, &neg}) {
        rng.shuffle(*cls);
        for (std::size_t i = 0; i < cls->size(); ++i)
            folds[i % k].validation.push_back((*cls)[i]);
    }
    for (FoldIndices& fold : folds) {
        std::sort(fold.validation.begin(), fold.validation.end());
        fold.train.reserve(labels.size() - fold.validation.size());
        std::size_t v = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (v < fold.validation.size() && fold.validation[v] == i) ++v;
            else fold.train.push_back(i);
        }
    }
    return folds;
}

inline std::vector<FoldIndices> kfold(const LabeledDataset& ds, std::size_t k,
                                      std::uint64_t seed) {
    return stratified_folds(ds.labels, k, seed);
}

} // namespace qscreen
