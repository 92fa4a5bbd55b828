#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>

#include "qscreen/csv.hpp"
#include "qscreen/dataset.hpp"
#include "test_util.hpp"

using qscreen::balance;
using qscreen::BalanceMode;
using qscreen::BalancePolicy;
using qscreen::kfold;
using qscreen::LabeledDataset;
using qscreen::load_csv;
using qscreen::LoadOptions;
using qscreen::stratified_split;
using qscreen::write_file_atomic;

namespace {

std::filesystem::path write_tmp(const std::string& name, const std::string& text) {
    const auto path = test_util::scratch_dir("dataset") / name;
    write_file_atomic(path, text);
    return path;
}

std::size_t positives(const LabeledDataset& ds) {
    return static_cast<std::size_t>(std::count(ds.labels.begin(), ds.labels.end(), 1));
}

} // namespace

TEST(LoadCsv, NumericColumnsAndLabelMapping) {
    const auto path = write_tmp("basic.csv",
                                "a,b,label\n"
                                "1.5,2,1\n"
                                "3,4,1\n"
                                "5,6,0\n"
                                "7,8,0\n");
    const auto report = load_csv(path, LoadOptions{.smiles_column = "none"});
    const auto& ds = report.dataset;
    EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"a", "b"}));
    ASSERT_EQ(ds.size(), 4u);
    EXPECT_EQ(ds.labels, (std::vector<int>{1, 1, -1, -1}));
    EXPECT_DOUBLE_EQ(ds.features(0, 0), 1.5);
    EXPECT_EQ(report.dropped_rows, 0u);
    // no id column: ids fall back to row indices
    EXPECT_EQ(ds.ids[0], "0");
}

TEST(LoadCsv, DropsNonFiniteRowsWithReasons) {
    const auto path = write_tmp("nan.csv",
                                "a,label\n"
                                "1,1\n"
                                "oops,1\n"
                                "3,0\n"
                                "4,0\n");
    const auto report = load_csv(path, LoadOptions{.smiles_column = "none"});
    EXPECT_EQ(report.dataset.size(), 3u);
    EXPECT_EQ(report.dropped_rows, 1u);
    ASSERT_EQ(report.rejects.size(), 1u);
    EXPECT_NE(report.rejects[0].reason.find("'a'"), std::string::npos);
}

TEST(LoadCsv, UnmappableLabelThrows) {
    const auto path = write_tmp("badlabel.csv", "a,label\n1,1\n2,2\n");
    EXPECT_THROW(load_csv(path, LoadOptions{.smiles_column = "none"}), std::runtime_error);
}

TEST(LoadCsv, CustomLabelMapping) {
    const auto path = write_tmp("custom.csv",
                                "a,outcome\nx1,active\n"
                                "2,inactive\n"
                                "3,active\n"
                                "4,inactive\n");
    LoadOptions opt;
    opt.label_column = "outcome";
    opt.positive_label = "active";
    opt.negative_label = "inactive";
    opt.smiles_column = "none";
    // first row has a bad feature value and is dropped; mapping still applies
    const auto report = load_csv(path, opt);
    EXPECT_EQ(report.dataset.size(), 3u);
    EXPECT_EQ(report.dataset.labels, (std::vector<int>{-1, 1, -1}));
}

TEST(LoadCsv, SingleClassFileThrows) {
    const auto path = write_tmp("oneclass.csv", "a,label\n1,1\n2,1\n");
    EXPECT_THROW(load_csv(path, LoadOptions{.smiles_column = "none"}), std::runtime_error);
}

TEST(LoadCsv, MissingLabelColumnThrows) {
    const auto path = write_tmp("nolabel.csv", "a,b\n1,2\n");
    EXPECT_THROW(load_csv(path, LoadOptions{.smiles_column = "none"}), std::invalid_argument);
}

TEST(LoadCsv, SmilesColumnExpandsToDescriptors) {
    const auto path = write_tmp("smiles.csv",
                                "id,smiles,label\n"
                                "m1,CCO,1\n"
                                "m2,c1ccccc1,0\n"
                                "m3,not_a_molecule,0\n"
                                "m4,CC,0\n");
    const auto report = load_csv(path);
    const auto& ds = report.dataset;
    EXPECT_EQ(ds.size(), 3u);
    EXPECT_EQ(report.dropped_rows, 1u);
    ASSERT_EQ(report.rejects.size(), 1u);
    EXPECT_NE(report.rejects[0].reason.find("smiles"), std::string::npos);
    EXPECT_EQ(ds.feature_names.size(), 16u);
    EXPECT_EQ(ds.feature_names.front(), "count_C");
    EXPECT_EQ(ds.ids, (std::vector<std::string>{"m1", "m2", "m4"}));
    // mol_wt column for ethanol
    const auto mw_col = std::find(ds.feature_names.begin(), ds.feature_names.end(), "mol_wt") -
                        ds.feature_names.begin();
    EXPECT_NEAR(ds.features(0, static_cast<std::size_t>(mw_col)), 46.069, 1e-9);
}

TEST(LoadCsv, SmilesPlusNumericColumnsCoexist) {
    const auto path = write_tmp("mixed.csv",
                                "smiles,extra,label\n"
                                "CCO,7,1\n"
                                "CC,8,0\n");
    const auto report = load_csv(path);
    EXPECT_EQ(report.dataset.feature_names.size(), 17u);
    EXPECT_EQ(report.dataset.feature_names[0], "extra");
}

TEST(Balance, AutoDownsamplesWhenActivesAboveThreshold) {
    const auto ds = test_util::counting_dataset(40, 70);
    const auto out = balance(ds, BalancePolicy{.seed = 7});
    EXPECT_EQ(out.size(), 80u);
    EXPECT_EQ(positives(out), 40u);
}

TEST(Balance, AutoPadsOneToSixWhenActivesScarce) {
    const auto ds = test_util::counting_dataset(17, 120);
    const auto out = balance(ds, BalancePolicy{.seed = 7});
    EXPECT_EQ(positives(out), 17u);
    EXPECT_EQ(out.size(), 17u + 102u);
}

TEST(Balance, PaddingCapsAtAvailableInactives) {
    const auto ds = test_util::counting_dataset(10, 40);
    const auto out = balance(ds, BalancePolicy{.seed = 7});
    EXPECT_EQ(out.size(), 50u); // wants 60 inactives, only 40 exist
}

TEST(Balance, ActivesAreAlwaysRetained) {
    const auto ds = test_util::counting_dataset(35, 200);
    const auto out = balance(ds, BalancePolicy{.seed = 3});
    std::set<std::string> kept(out.ids.begin(), out.ids.end());
    for (std::size_t r = 0; r < 35; ++r) EXPECT_TRUE(kept.count(std::to_string(r))) << r;
}

TEST(Balance, ForcedModesOverrideThreshold) {
    const auto ds = test_util::counting_dataset(17, 120);
    const auto one_to_one =
        balance(ds, BalancePolicy{.mode = BalanceMode::OneToOneDownsample, .seed = 1});
    EXPECT_EQ(one_to_one.size(), 34u);
    const auto padded =
        balance(test_util::counting_dataset(40, 400),
                BalancePolicy{.mode = BalanceMode::OneToSixPadding, .seed = 1});
    EXPECT_EQ(padded.size(), 40u + 240u);
}

TEST(Balance, DeterministicUnderSeed) {
    const auto ds = test_util::counting_dataset(40, 300);
    const auto a = balance(ds, BalancePolicy{.seed = 11});
    const auto b = balance(ds, BalancePolicy{.seed = 11});
    EXPECT_EQ(a.ids, b.ids);
    const auto c = balance(ds, BalancePolicy{.seed = 12});
    EXPECT_NE(a.ids, c.ids); // different seed reshuffles selection
}

TEST(StratifiedSplit, PreservesClassRatioAndPartitions) {
    const auto ds = test_util::counting_dataset(10, 10);
    const auto [train, test] = stratified_split(ds, 0.8, 5);
    EXPECT_EQ(train.size(), 16u);
    EXPECT_EQ(test.size(), 4u);
    EXPECT_EQ(positives(train), 8u);
    EXPECT_EQ(positives(test), 2u);
    std::set<std::string> ids(train.ids.begin(), train.ids.end());
    for (const auto& id : test.ids) EXPECT_FALSE(ids.count(id)) << id;
    EXPECT_EQ(ids.size() + test.ids.size(), 20u);
}

TEST(StratifiedSplit, RoundsHalfUpPerClass) {
    const auto ds = test_util::counting_dataset(5, 5);
    const auto [train, test] = stratified_split(ds, 0.5, 1);
    // floor(0.5*5 + 0.5) = 3 per class to train
    EXPECT_EQ(positives(train), 3u);
    EXPECT_EQ(positives(test), 2u);
}

TEST(StratifiedSplit, DeterministicUnderSeed) {
    const auto ds = test_util::counting_dataset(12, 12);
    const auto [a_train, a_test] = stratified_split(ds, 0.75, 42);
    const auto [b_train, b_test] = stratified_split(ds, 0.75, 42);
    EXPECT_EQ(a_train.ids, b_train.ids);
    EXPECT_EQ(a_test.ids, b_test.ids);
}

TEST(StratifiedSplit, RejectsDegenerateInputs) {
    const auto ds = test_util::counting_dataset(1, 10);
    EXPECT_THROW(stratified_split(ds, 0.8, 1), std::invalid_argument);
    const auto ok = test_util::counting_dataset(5, 5);
    EXPECT_THROW(stratified_split(ok, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(stratified_split(ok, 1.0, 1), std::invalid_argument);
}

TEST(KFold, FoldsPartitionEachClass) {
    const auto ds = test_util::counting_dataset(10, 10);
    const auto folds = kfold(ds, 10, 3);
    ASSERT_EQ(folds.size(), 10u);
    std::set<std::size_t> seen;
    for (const auto& fold : folds) {
        EXPECT_EQ(fold.validation.size(), 2u); // one per class
        EXPECT_EQ(fold.train.size(), 18u);
        std::size_t pos = 0;
        for (const auto idx : fold.validation) {
            seen.insert(idx);
            if (ds.labels[idx] > 0) ++pos;
        }
        EXPECT_EQ(pos, 1u);
        // train and validation are disjoint
        std::set<std::size_t> train_set(fold.train.begin(), fold.train.end());
        for (const auto idx : fold.validation) EXPECT_FALSE(train_set.count(idx));
    }
    EXPECT_EQ(seen.size(), 20u); // validation folds cover every row exactly once
}

TEST(KFold, RejectsKLargerThanClass) {
    const auto ds = test_util::counting_dataset(2, 8);
    EXPECT_THROW(kfold(ds, 3, 0), std::invalid_argument);
}
