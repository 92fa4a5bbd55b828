#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qscreen/matrix.hpp"

namespace qscreen {

/// Per-column standardization with the population (1/n) std convention.
/// Zero-variance columns are flagged by std == 0 and scale to 0.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;
};

inline Scaler standardize_fit(const Matrix& x) {
    if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("standardize_fit: empty matrix");
    Scaler s;
    s.mean.assign(x.cols(), 0.0);
    s.stddev.assign(x.cols(), 0.0);
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) sum += x(r, c);
        const double mean = sum / static_cast<double>(x.rows());
        double ss = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const double d = x(r, c) - mean;
            ss += d * d;
        }
        s.mean[c] = mean;
        s.stddev[c] = std::sqrt(ss / static_cast<double>(x.rows()));
    }
    return s;
}

inline Matrix standardize_apply(const Scaler& s, const Matrix& x) {
    if (x.cols() != s.mean.size()) throw std::invalid_argument("standardize_apply: column-count mismatch");
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c)
            out(r, c) = s.stddev[c] > 0.0 ? (x(r, c) - s.mean[c]) / s.stddev[c] : 0.0;
    return out;
}

/// Principal components of a centered matrix: rows of `components` are the
/// right singular vectors ordered by singular value; explained_variance uses
/// the sample (n-1) convention so it matches sample-covariance eigenvalues.
/// Sign convention: the largest-magnitude entry of each component is positive.
struct PcaModel {
    Matrix components;                       // n_components x n_original
    std::vector<double> explained_variance;  // non-increasing
    std::vector<double> column_mean;
};

inline PcaModel pca_fit(const Matrix& x, std::size_t n_components) {
    if (x.rows() < 2) throw std::invalid_argument("pca_fit: need at least 2 rows");
    if (n_components == 0 || n_components > std::min(x.rows() - 1, x.cols()))
        throw std::invalid_argument("pca_fit: n_components exceeds min(rows-1, cols)");

    Eigen::MatrixXd m(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) m(r, c) = x(r, c);
    const Eigen::RowVectorXd mean = m.colwise().mean();
    m.rowwise() -= mean;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
    const Eigen::MatrixXd& v = svd.matrixV();
    const Eigen::VectorXd& sv = svd.singularValues();

    PcaModel model;
    model.column_mean.assign(mean.data(), mean.data() + mean.size());
    model.components = Matrix(n_components, x.cols());
    model.explained_variance.resize(n_components);
    for (std::size_t k = 0; k < n_components; ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        model.explained_variance[k] =
            sv(ki) * sv(ki) / static_cast<double>(x.rows() - 1);
        Eigen::Index largest = 0;
        v.col(ki).cwiseAbs().maxCoeff(&largest);
        const double sign = v(largest, ki) < 0.0 ? -1.0 : 1.0;
        for (std::size_t c = 0; c < x.cols(); ++c)
            model.components(k, c) = sign * v(static_cast<Eigen::Index>(c), ki);
    }
    return model;
}

inline Matrix pca_transform(const PcaModel& model, const Matrix& x) {
    if (x.cols() != model.column_mean.size())
        throw std::invalid_argument("pca_transform: column-count mismatch");
    const std::size_t n = model.components.rows();
    Matrix out(x.rows(), n);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t k = 0; k < n; ++k) {
            double acc = 0.0;
            for (std::size_t c = 0; c < x.cols(); ++c)
                acc += (x(r, c) - model.column_mean[c]) * model.components(k, c);
            out(r, k) = acc;
        }
    return out;
}

/// Univariate two-class ANOVA ranking. selected holds the n top-F column
/// indices in ascending index order; ties go to the lower column index.
struct AnovaSelection {
    std::vector<std::size_t> selected;
    std::vector<double> f_scores;
};

inline AnovaSelection anova_select(const Matrix& x, const std::vector<int>& y, std::size_t n) {
    if (x.rows() != y.size()) throw std::invalid_argument("anova_select: row/label mismatch");
    if (n == 0 || n > x.cols()) throw std::invalid_argument("anova_select: n out of range");
    std::size_t n_pos = 0, n_neg = 0;
    for (const int label : y) (label > 0 ? n_pos : n_neg) += 1;
    if (n_pos < 2 || n_neg < 2)
        throw std::invalid_argument("anova_select: each class needs at least 2 members");

    const auto rows = static_cast<double>(x.rows());
    AnovaSelection sel;
    sel.f_scores.resize(x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double sum_pos = 0.0, sum_neg = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r)
            (y[r] > 0 ? sum_pos : sum_neg) += x(r, c);
        const double mean_pos = sum_pos / static_cast<double>(n_pos);
        const double mean_neg = sum_neg / static_cast<double>(n_neg);
        const double mean_all = (sum_pos + sum_neg) / rows;
        double ssw = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const double d = x(r, c) - (y[r] > 0 ? mean_pos : mean_neg);
            ssw += d * d;
        }
        const double ssb = static_cast<double>(n_pos) * (mean_pos - mean_all) * (mean_pos - mean_all) +
                           static_cast<double>(n_neg) * (mean_neg - mean_all) * (mean_neg - mean_all);
        // df_between = 1 (two classes), df_within = N - 2
        if (ssb == 0.0)
            sel.f_scores[c] = 0.0;
        else if (ssw == 0.0)
            sel.f_scores[c] = std::numeric_limits<double>::infinity();
        else
            sel.f_scores[c] = ssb / (ssw / (rows - 2.0));
    }

    std::vector<std::size_t> order(x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) order[c] = c;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sel.f_scores[a] != sel.f_scores[b]) return sel.f_scores[a] > sel.f_scores[b];
        return a < b;
    });
    sel.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(sel.selected.begin(), sel.selected.end());
    return sel;
}

/// Linear map of each column from its training [min, max] onto [0, pi].
/// Out-of-range test values clip; a degenerate column maps to pi/2.
struct AngleScaler {
    std::vector<double> min;
    std::vector<double> max;
};

inline AngleScaler angle_fit(const Matrix& x) {
    if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("angle_fit: empty matrix");
    AngleScaler a;
    a.min.assign(x.cols(), 0.0);
    a.max.assign(x.cols(), 0.0);
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double lo = x(0, c), hi = x(0, c);
        for (std::size_t r = 1; r < x.rows(); ++r) {
            lo = std::min(lo, x(r, c));
            hi = std::max(hi, x(r, c));
        }
        a.min[c] = lo;
        a.max[c] = hi;
    }
    return a;
}

inline Matrix angle_apply(const AngleScaler& a, const Matrix& x) {
    if (x.cols() != a.min.size()) throw std::invalid_argument("angle_apply: column-count mismatch");
    constexpr double pi = std::numbers::pi;
    Matrix out(x.rows(), x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        const double span = a.max[c] - a.min[c];
        for (std::size_t r = 0; r < x.rows(); ++r) {
            if (span <= 0.0) {
                out(r, c) = pi / 2.0;
                continue;
            }
            out(r, c) = std::clamp((x(r, c) - a.min[c]) / span * pi, 0.0, pi);
        }
    }
    return out;
}

enum class Selector { Pca, Anova };

inline std::string selector_name(Selector s) { return s == Selector::Pca ? "pca" : "anova"; }

inline Selector selector_from_name(const std::string& name) {
    if (name == "pca") return Selector::Pca;
    if (name == "anova") return Selector::Anova;
    throw std::invalid_argument("unknown selector '" + name + "'");
}

inline std::uint64_t matrix_fingerprint(const Matrix& x, const std::vector<int>& y) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    mix(x.rows());
    mix(x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) {
            double v = x(r, c);
            std::uint64_t bits;
            static_assert(sizeof bits == sizeof v);
            __builtin_memcpy(&bits, &v, sizeof bits);
            mix(bits);
        }
    for (const int label : y) mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(label)));
    return h;
}

/// Fitted preprocessing chain: standardize, then PCA or ANOVA selection down
/// to n_features, then angle scaling for the quantum branch. fit() consumes
/// training rows only; train_fingerprint records exactly what it saw.
struct FeaturePipeline {
    Selector selector = Selector::Pca;
    std::size_t n_features = 0;
    Scaler scaler;
    PcaModel pca;
    AnovaSelection anova;
    AngleScaler angles;
    std::uint64_t train_fingerprint = 0;
};

inline FeaturePipeline pipeline_fit(const Matrix& x_train, const std::vector<int>& y_train,
                                    Selector selector, std::size_t n_features) {
    FeaturePipeline p;
    p.selector = selector;
    p.n_features = n_features;
    p.train_fingerprint = matrix_fingerprint(x_train, y_train);
    p.scaler = standardize_fit(x_train);
    const Matrix std_train = standardize_apply(p.scaler, x_train);
    Matrix selected;
    if (selector == Selector::Pca) {
        p.pca = pca_fit(std_train, n_features);
        selected = pca_transform(p.pca, std_train);
    } else {
        p.anova = anova_select(std_train, y_train, n_features);
        std::vector<std::size_t> cols = p.anova.selected;
        selected = std_train.select_cols(cols);
    }
    p.angles = angle_fit(selected);
    return p;
}

/// Standardized + selected features (classical-kernel input).
inline Matrix pipeline_features(const FeaturePipeline& p, const Matrix& x) {
    const Matrix standardized = standardize_apply(p.scaler, x);
    if (p.selector == Selector::Pca) return pca_transform(p.pca, standardized);
    return standardized.select_cols(p.anova.selected);
}

/// Angle-encoded features in [0, pi] (quantum-kernel input).
inline Matrix pipeline_angles(const FeaturePipeline& p, const Matrix& x) {
    return angle_apply(p.angles, pipeline_features(p, x));
}

inline nlohmann::json pipeline_to_json(const FeaturePipeline& p) {
    nlohmann::json j;
    j["selector"] = selector_name(p.selector);
    j["n_features"] = p.n_features;
    j["mean"] = p.scaler.mean;
    j["std"] = p.scaler.stddev;
    if (p.selector == Selector::Pca) {
        j["components"] = nlohmann::json::array();
        for (std::size_t k = 0; k < p.pca.components.rows(); ++k) {
            const auto row = p.pca.components.row(k);
            j["components"].push_back(std::vector<double>(row.begin(), row.end()));
        }
        j["explained_variance"] = p.pca.explained_variance;
        j["column_mean"] = p.pca.column_mean;
    } else {
        j["selected"] = p.anova.selected;
        j["f_scores"] = p.anova.f_scores;
    }
    j["angle_min"] = p.angles.min;
    j["angle_max"] = p.angles.max;
    j["train_fingerprint"] = p.train_fingerprint;
    return j;
}

inline FeaturePipeline pipeline_from_json(const nlohmann::json& j) {
    FeaturePipeline p;
    p.selector = selector_from_name(j.at("selector").get<std::string>());
    p.n_features = j.at("n_features").get<std::size_t>();
    p.scaler.mean = j.at("mean").get<std::vector<double>>();
    p.scaler.stddev = j.at("std").get<std::vector<double>>();
    if (p.selector == Selector::Pca) {
        const auto rows = j.at("components").get<std::vector<std::vector<double>>>();
        p.pca.components = Matrix::from_rows(rows);
        p.pca.explained_variance = j.at("explained_variance").get<std::vector<double>>();
        p.pca.column_mean = j.at("column_mean").get<std::vector<double>>();
    } else {
        p.anova.selected = j.at("selected").get<std::vector<std::size_t>>();
        p.anova.f_scores = j.at("f_scores").get<std::vector<double>>();
    }
    p.angles.min = j.at("angle_min").get<std::vector<double>>();
    p.angles.max = j.at("angle_max").get<std::vector<double>>();
    p.train_fingerprint = j.at("train_fingerprint").get<std::uint64_t>();
    return p;
}

} // namespace qscreen
