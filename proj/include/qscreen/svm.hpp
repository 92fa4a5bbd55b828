#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qscreen/dataset.hpp"
#include "qscreen/eval.hpp"
#include "qscreen/matrix.hpp"

namespace qscreen {

enum class KernelKind { Linear, Poly, Rbf, Precomputed };

struct KernelSpec {
    KernelKind kind = KernelKind::Rbf;
    int degree = 3;       // poly only
    double coef0 = 1.0;   // poly only
    double gamma = 1.0;   // rbf only
};

inline std::string kernel_name(const KernelSpec& spec) {
    switch (spec.kind) {
        case KernelKind::Linear: return "linear";
        case KernelKind::Poly: return "poly" + std::to_string(spec.degree);
        case KernelKind::Rbf: return "rbf";
        case KernelKind::Precomputed: return "precomputed";
    }
    return "?";
}

inline double classical_kernel(const KernelSpec& spec, std::span<const double> x,
                               std::span<const double> xp) {
    if (x.size() != xp.size()) throw std::invalid_argument("kernel: dimension mismatch");
    switch (spec.kind) {
        case KernelKind::Linear: return dot(x, xp);
        case KernelKind::Poly:
            if (spec.degree < 1) throw std::invalid_argument("kernel: degree must be >= 1");
            return std::pow(dot(x, xp) + spec.coef0, spec.degree);
        case KernelKind::Rbf:
            if (!(spec.gamma > 0.0)) throw std::invalid_argument("kernel: gamma must be > 0");
            return std::exp(-spec.gamma * squared_distance(x, xp));
        case KernelKind::Precomputed:
            throw std::invalid_argument("kernel: precomputed kind has no pointwise form");
    }
    return 0.0;
}

inline Matrix classical_gram(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < b.rows(); ++c)
            out(r, c) = classical_kernel(spec, a.row(r), b.row(c));
    return out;
}

struct SmoOptions {
    double tol = 1e-3;
    std::size_t max_iter = 0;  // 0 = auto (scales with problem size)
    bool paper_box = false;    // use the 1/(2nC) box bound instead of C
};

struct DualSolution {
    std::vector<double> alpha;
    double bias = 0.0;
    double c = 0.0;
    double box_upper = 0.0;  // effective upper bound (C, or 1/(2nC) under paper_box)
    std::vector<std::size_t> support;  // indices with alpha > 1e-8
    double objective = 0.0;  // maximization form: sum(alpha) - 1/2 a'Qa
    bool converged = false;
    std::size_t iterations = 0;
};

/// SMO with maximal-violating-pair working-set selection on the C-SVC dual:
/// maximize sum(alpha) - 1/2 sum y_i y_j alpha_i alpha_j K_ij subject to
/// 0 <= alpha <= U and sum alpha_i y_i = 0. Stops when the duality-gap bound
/// m(alpha) - M(alpha) drops below tol. Negative-curvature pair directions
/// (possible on indefinite sampled kernels) are clipped to box corners via
/// the small TAU floor.
inline DualSolution smo_train(const Matrix& k, const std::vector<int>& y, double c,
                              const SmoOptions& opt = {}) {
    const std::size_t n = k.rows();
    if (k.cols() != n) throw std::invalid_argument("smo_train: kernel matrix must be square");
    if (y.size() != n) throw std::invalid_argument("smo_train: label count mismatch");
    if (!(c > 0.0)) throw std::invalid_argument("smo_train: C must be positive");
    for (const int label : y)
        if (label != 1 && label != -1) throw std::invalid_argument("smo_train: labels must be +-1");

    const double upper = opt.paper_box ? 1.0 / (2.0 * static_cast<double>(n) * c) : c;
    const std::size_t max_iter = opt.max_iter > 0 ? opt.max_iter : std::max<std::size_t>(n * 2000, 200000);
    constexpr double kTau = 1e-12;
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);  // G_i = sum_j Q_ij alpha_j - 1
    const auto q = [&](std::size_t i, std::size_t j) {
        return static_cast<double>(y[i] * y[j]) * k(i, j);
    };

    DualSolution sol;
    sol.c = c;
    sol.box_upper = upper;

    std::size_t iter = 0;
    bool converged = false;
    while (iter < max_iter) {
        // working-set selection: most violating pair
        double g_max = -inf, g_min = inf;
        std::size_t i = n, j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -static_cast<double>(y[t]) * grad[t];
            const bool in_up = (y[t] > 0 && alpha[t] < upper) || (y[t] < 0 && alpha[t] > 0.0);
            const bool in_low = (y[t] > 0 && alpha[t] > 0.0) || (y[t] < 0 && alpha[t] < upper);
            if (in_up && v > g_max) { g_max = v; i = t; }
            if (in_low && v < g_min) { g_min = v; j = t; }
        }
        if (i == n || j == n || g_max - g_min < opt.tol) {
            converged = true;
            break;
        }
        ++iter;

        const double old_i = alpha[i], old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = k(i, i) + k(j, j) + 2.0 * k(i, j) * static_cast<double>(y[i] * y[j]);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
            } else {
                if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
            }
            if (diff > 0.0) {
                if (alpha[i] > upper) { alpha[i] = upper; alpha[j] = upper - diff; }
            } else {
                if (alpha[j] > upper) { alpha[j] = upper; alpha[i] = upper + diff; }
            }
        } else {
            double quad = k(i, i) + k(j, j) - 2.0 * k(i, j) * static_cast<double>(y[i] * y[j]);
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > upper) {
                if (alpha[i] > upper) { alpha[i] = upper; alpha[j] = sum - upper; }
            } else {
                if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
            }
            if (sum > upper) {
                if (alpha[j] > upper) { alpha[j] = upper; alpha[i] = sum - upper; }
            } else {
                if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
            }
        }

        const double d_i = alpha[i] - old_i, d_j = alpha[j] - old_j;
        if (d_i == 0.0 && d_j == 0.0) break;  // no representable progress on the worst pair
        for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, i) * d_i + q(t, j) * d_j;
    }

    // bias: average y_t*G_t over free vectors, else midpoint of the KKT bounds
    double ub = inf, lb = -inf, sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = static_cast<double>(y[t]) * grad[t];
        if (alpha[t] >= upper) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0.0) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    double rho;
    if (n_free > 0) rho = sum_free / static_cast<double>(n_free);
    else if (std::isfinite(ub) && std::isfinite(lb)) rho = (ub + lb) / 2.0;
    else if (std::isfinite(ub)) rho = ub;
    else if (std::isfinite(lb)) rho = lb;
    else rho = 0.0;

    sol.alpha = std::move(alpha);
    sol.bias = -rho;
    sol.converged = converged;
    sol.iterations = iter;
    for (std::size_t t = 0; t < n; ++t)
        if (sol.alpha[t] > 1e-8) sol.support.push_back(t);

    double quad_term = 0.0, lin_term = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        if (sol.alpha[a] == 0.0) continue;
        lin_term += sol.alpha[a];
        for (std::size_t b = 0; b < n; ++b)
            quad_term += sol.alpha[a] * sol.alpha[b] * q(a, b);
    }
    sol.objective = lin_term - 0.5 * quad_term;
    return sol;
}

struct TrainedSvcModel {
    DualSolution dual;
    std::vector<int> labels;
    Matrix train_inputs;  // feature rows (empty for precomputed kernels)
    KernelSpec kernel;
    std::string preprocessing_ref;  // fingerprint or path of the fitted pipeline
};

/// Train on feature rows with a classical kernel, or on a precomputed Gram
/// matrix (x is then the square kernel matrix itself).
inline TrainedSvcModel svc_train(const Matrix& x, const std::vector<int>& y,
                                 const KernelSpec& spec, double c, const SmoOptions& opt = {}) {
    TrainedSvcModel model;
    model.kernel = spec;
    model.labels = y;
    if (spec.kind == KernelKind::Precomputed) {
        model.dual = smo_train(x, y, c, opt);
    } else {
        model.train_inputs = x;
        model.dual = smo_train(classical_gram(spec, x, x), y, c, opt);
    }
    return model;
}

/// Scores from kernel rows against the training set: sum_i alpha_i y_i K(x_i, x) + b.
inline std::vector<double> decision_function(const TrainedSvcModel& model, const Matrix& k_test) {
    const std::size_t n = model.labels.size();
    if (k_test.cols() != n) throw std::invalid_argument("decision_function: column count mismatch");
    std::vector<double> scores(k_test.rows(), model.dual.bias);
    for (std::size_t r = 0; r < k_test.rows(); ++r)
        for (std::size_t t = 0; t < n; ++t)
            scores[r] += model.dual.alpha[t] * static_cast<double>(model.labels[t]) * k_test(r, t);
    return scores;
}

inline std::vector<double> svc_scores(const TrainedSvcModel& model, const Matrix& x_test) {
    if (model.kernel.kind == KernelKind::Precomputed)
        throw std::invalid_argument("svc_scores: precomputed-kernel models need kernel rows");
    return decision_function(model, classical_gram(model.kernel, x_test, model.train_inputs));
}

/// Sign rule with ties to the negative class.
inline std::vector<int> predict_labels(const std::vector<double>& scores) {
    std::vector<int> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > 0.0 ? 1 : -1;
    return out;
}

inline nlohmann::json model_to_json(const TrainedSvcModel& model) {
    nlohmann::json j;
    j["alpha"] = model.dual.alpha;
    j["bias"] = model.dual.bias;
    j["c"] = model.dual.c;
    j["box_upper"] = model.dual.box_upper;
    j["labels"] = model.labels;
    j["kernel"]["kind"] = kernel_name(model.kernel);
    j["kernel"]["degree"] = model.kernel.degree;
    j["kernel"]["coef0"] = model.kernel.coef0;
    j["kernel"]["gamma"] = model.kernel.gamma;
    j["train_inputs"] = nlohmann::json::array();
    for (std::size_t r = 0; r < model.train_inputs.rows(); ++r) {
        const auto row = model.train_inputs.row(r);
        j["train_inputs"].push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["preprocessing_ref"] = model.preprocessing_ref;
    return j;
}

inline TrainedSvcModel model_from_json(const nlohmann::json& j) {
    TrainedSvcModel model;
    model.dual.alpha = j.at("alpha").get<std::vector<double>>();
    model.dual.bias = j.at("bias").get<double>();
    model.dual.c = j.at("c").get<double>();
    model.dual.box_upper = j.at("box_upper").get<double>();
    for (std::size_t t = 0; t < model.dual.alpha.size(); ++t)
        if (model.dual.alpha[t] > 1e-8) model.dual.support.push_back(t);
    model.labels = j.at("labels").get<std::vector<int>>();
    const std::string kind = j.at("kernel").at("kind").get<std::string>();
    if (kind == "linear") model.kernel.kind = KernelKind::Linear;
    else if (kind.rfind("poly", 0) == 0) model.kernel.kind = KernelKind::Poly;
    else if (kind == "rbf") model.kernel.kind = KernelKind::Rbf;
    else if (kind == "precomputed") model.kernel.kind = KernelKind::Precomputed;
    else throw std::invalid_argument("model_from_json: unknown kernel kind '" + kind + "'");
    model.kernel.degree = j.at("kernel").at("degree").get<int>();
    model.kernel.coef0 = j.at("kernel").at("coef0").get<double>();
    model.kernel.gamma = j.at("kernel").at("gamma").get<double>();
    model.train_inputs = Matrix::from_rows(
        j.at("train_inputs").get<std::vector<std::vector<double>>>());
    model.preprocessing_ref = j.at("preprocessing_ref").get<std::string>();
    return model;
}

struct GridSpec {
    std::vector<double> c_values = {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
    std::vector<double> gamma_values;   // empty = decades 1e-4..10 plus 1/n_features
    std::vector<KernelSpec> kernels;    // empty = linear, poly(2), poly(3), rbf
};

inline std::vector<double> default_gamma_values(std::size_t n_features) {
    std::vector<double> g = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    if (n_features > 0) {
        const double inv = 1.0 / static_cast<double>(n_features);
        if (std::find(g.begin(), g.end(), inv) == g.end()) g.push_back(inv);
    }
    return g;
}

struct GridResult {
    KernelSpec kernel;
    double c = 1.0;
    double mean_auc = 0.0;
};

namespace svm_detail {

inline int kind_rank(const KernelSpec& s) {
    switch (s.kind) {
        case KernelKind::Rbf: return 0;
        case KernelKind::Poly: return 1;
        case KernelKind::Linear: return 2;
        case KernelKind::Precomputed: return 3;
    }
    return 3;
}

// tie order: higher AUC, then smaller C, then rbf > poly > linear (smaller
// degree first), then smaller gamma
inline bool better(const GridResult& a, const GridResult& b) {
    if (a.mean_auc != b.mean_auc) return a.mean_auc > b.mean_auc;
    if (a.c != b.c) return a.c < b.c;
    if (kind_rank(a.kernel) != kind_rank(b.kernel)) return kind_rank(a.kernel) < kind_rank(b.kernel);
    if (a.kernel.degree != b.kernel.degree) return a.kernel.degree < b.kernel.degree;
    const double ga = a.kernel.kind == KernelKind::Rbf ? a.kernel.gamma : 0.0;
    const double gb = b.kernel.kind == KernelKind::Rbf ? b.kernel.gamma : 0.0;
    return ga < gb;
}

} // namespace svm_detail

/// Exhaustive search over (kernel, C, gamma) maximizing mean cross-validated
/// AUC over stratified folds. The pairwise dot-product Gram is computed once;
/// every cell is an elementwise transform of it.
inline GridResult grid_search(const Matrix& x, const std::vector<int>& y, const GridSpec& grid,
                              std::size_t folds, std::uint64_t seed,
                              const SmoOptions& smo_opt = {}) {
    if (grid.c_values.empty()) throw std::invalid_argument("grid_search: empty C list");
    std::vector<KernelSpec> kernels = grid.kernels;
    if (kernels.empty())
        kernels = {{KernelKind::Linear, 1, 1.0, 1.0},
                   {KernelKind::Poly, 2, 1.0, 1.0},
                   {KernelKind::Poly, 3, 1.0, 1.0},
                   {KernelKind::Rbf, 1, 1.0, 1.0}};
    const std::vector<double> gammas =
        grid.gamma_values.empty() ? default_gamma_values(x.cols()) : grid.gamma_values;

    std::vector<KernelSpec> cells;
    for (const KernelSpec& k : kernels) {
        if (k.kind == KernelKind::Rbf)
            for (const double g : gammas) {
                KernelSpec cell = k;
                cell.gamma = g;
                cells.push_back(cell);
            }
        else cells.push_back(k);
    }

    const std::vector<FoldIndices> fold_set = stratified_folds(y, folds, seed);
    const std::size_t n = x.rows();
    Matrix dots(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = r; c < n; ++c)
            dots(r, c) = dots(c, r) = dot(x.row(r), x.row(c));

    bool have_best = false;
    GridResult best;
    Matrix k_full(n, n);
    for (const KernelSpec& cell : cells) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                const double d = dots(r, c);
                switch (cell.kind) {
                    case KernelKind::Linear: k_full(r, c) = d; break;
                    case KernelKind::Poly:
                        k_full(r, c) = std::pow(d + cell.coef0, cell.degree);
                        break;
                    case KernelKind::Rbf:
                        k_full(r, c) = std::exp(
                            -cell.gamma * (dots(r, r) + dots(c, c) - 2.0 * d));
                        break;
                    case KernelKind::Precomputed:
                        throw std::invalid_argument("grid_search: precomputed cells unsupported");
                }
            }
        for (const double c_value : grid.c_values) {
            double auc_sum = 0.0;
            for (const FoldIndices& fold : fold_set) {
                const Matrix k_train =
                    k_full.select_rows(fold.train).select_cols(fold.train);
                std::vector<int> y_train;
                y_train.reserve(fold.train.size());
                for (const std::size_t t : fold.train) y_train.push_back(y[t]);
                const DualSolution dual = smo_train(k_train, y_train, c_value, smo_opt);

                std::vector<int> y_val;
                std::vector<double> scores;
                y_val.reserve(fold.validation.size());
                scores.reserve(fold.validation.size());
                for (const std::size_t v : fold.validation) {
                    double s = dual.bias;
                    for (std::size_t t = 0; t < fold.train.size(); ++t)
                        s += dual.alpha[t] * static_cast<double>(y_train[t]) *
                             k_full(v, fold.train[t]);
                    scores.push_back(s);
                    y_val.push_back(y[v]);
                }
                auc_sum += roc_auc(y_val, scores);
            }
            GridResult candidate{cell, c_value, auc_sum / static_cast<double>(fold_set.size())};
            if (!have_best || svm_detail::better(candidate, best)) {
                best = candidate;
                have_best = true;
            }
        }
    }
    return best;
}

inline GridResult grid_search(const LabeledDataset& train, const GridSpec& grid, std::size_t folds,
                              std::uint64_t seed, const SmoOptions& smo_opt = {}) {
    return grid_search(train.features, train.labels, grid, folds, seed, smo_opt);
}

} // namespace qscreen
