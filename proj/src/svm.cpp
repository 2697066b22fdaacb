#include "crowdtex/svm.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include <zlib.h>

#include "crowdtex/errors.hpp"
#include "crowdtex/kernels.hpp"
#include "crowdtex/parallel.hpp"
#include "crowdtex/rng.hpp"

namespace crowdtex {

void KernelSpec::validate() const {
    if (kind == KernelKind::rbf && (!(gamma > 0.0) || !std::isfinite(gamma))) {
        raise(Errc::invalid_config, "rbf gamma must be finite and positive");
    }
}

void SvmTrainParams::validate() const {
    kernel.validate();
    if (!(C > 0.0) || !std::isfinite(C)) raise(Errc::invalid_config, "C must be positive");
    if (!(tol > 0.0)) raise(Errc::invalid_config, "tol must be positive");
    if (max_passes < 0) raise(Errc::invalid_config, "max_passes must be >= 0");
}

double kernel_eval(const std::vector<double>& a, const std::vector<double>& b,
                   const KernelSpec& spec) {
    spec.validate();
    if (a.size() != b.size()) {
        raise(Errc::dimension_mismatch, "kernel operands have lengths " + std::to_string(a.size()) +
                                            " and " + std::to_string(b.size()));
    }
    if (spec.kind == KernelKind::linear) return kernels::dot(a.data(), b.data(), a.size());
    return std::exp(-spec.gamma * kernels::squared_distance(a.data(), b.data(), a.size()));
}

// ============================================================================
// SMO solver
// ============================================================================

namespace detail {

namespace {
constexpr double kAlphaEps = 1e-12;

#ifndef NDEBUG
double dual_objective(const std::vector<double>& gram, std::size_t n,
                      const std::vector<int>& labels, const std::vector<double>& alpha) {
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        obj += alpha[i];
        for (std::size_t j = 0; j < n; ++j) {
            obj -= 0.5 * alpha[i] * alpha[j] * labels[i] * labels[j] * gram[i * n + j];
        }
    }
    return obj;
}
#endif
} // namespace

SmoResult smo_solve(const std::vector<double>& gram, std::size_t n, const std::vector<int>& labels,
                    double c, double tol, int max_passes, std::uint64_t seed) {
    SmoResult res;
    res.alpha.assign(n, 0.0);
    double& b = res.bias;
    std::vector<double> err(n);
    for (std::size_t i = 0; i < n; ++i) err[i] = -labels[i]; // f == 0 initially
    Rng rng(seed);

    const auto k = [&](std::size_t i, std::size_t j) { return gram[i * n + j]; };
    const auto non_bound = [&](std::size_t i) {
        return res.alpha[i] > kAlphaEps && res.alpha[i] < c - kAlphaEps;
    };

    auto take_step = [&](std::size_t i1, std::size_t i2) -> bool {
        if (i1 == i2) return false;
        const double a1o = res.alpha[i1], a2o = res.alpha[i2];
        const int y1 = labels[i1], y2 = labels[i2];
        const double e1 = err[i1], e2 = err[i2];
        const double s = y1 * y2;

        double lo, hi;
        if (y1 != y2) {
            lo = std::max(0.0, a2o - a1o);
            hi = std::min(c, c + a2o - a1o);
        } else {
            lo = std::max(0.0, a1o + a2o - c);
            hi = std::min(c, a1o + a2o);
        }
        if (lo >= hi) return false;

        const double k11 = k(i1, i1), k12 = k(i1, i2), k22 = k(i2, i2);
        const double eta = k11 + k22 - 2.0 * k12;
        double a2;
        if (eta > 0.0) {
            a2 = std::clamp(a2o + y2 * (e1 - e2) / eta, lo, hi);
        } else {
            // Flat or concave direction (duplicate points): compare the dual
            // objective at the segment endpoints.
            const double v1 = e1 + y1 - b - a1o * y1 * k11 - a2o * y2 * k12;
            const double v2 = e2 + y2 - b - a1o * y1 * k12 - a2o * y2 * k22;
            const auto w = [&](double t) {
                const double a1t = a1o + s * (a2o - t);
                return a1t + t - 0.5 * k11 * a1t * a1t - 0.5 * k22 * t * t - s * k12 * a1t * t -
                       y1 * v1 * a1t - y2 * v2 * t;
            };
            const double w_lo = w(lo), w_hi = w(hi);
            if (w_lo > w_hi + kAlphaEps) {
                a2 = lo;
            } else if (w_hi > w_lo + kAlphaEps) {
                a2 = hi;
            } else {
                return false;
            }
        }
        if (std::abs(a2 - a2o) < kAlphaEps * (a2 + a2o + kAlphaEps)) return false;

        double a1 = a1o + s * (a2o - a2);
        a1 = std::clamp(a1, 0.0, c);

#ifndef NDEBUG
        const double obj_before =
            n <= 512 ? dual_objective(gram, n, labels, res.alpha) : 0.0;
#endif
        const double d1 = (a1 - a1o) * y1;
        const double d2 = (a2 - a2o) * y2;
        const double b1 = b - e1 - d1 * k11 - d2 * k12;
        const double b2 = b - e2 - d1 * k12 - d2 * k22;
        double b_new;
        if (a1 > kAlphaEps && a1 < c - kAlphaEps) {
            b_new = b1;
        } else if (a2 > kAlphaEps && a2 < c - kAlphaEps) {
            b_new = b2;
        } else {
            b_new = 0.5 * (b1 + b2);
        }
        const double db = b_new - b;
        for (std::size_t i = 0; i < n; ++i) {
            err[i] += d1 * k(i1, i) + d2 * k(i2, i) + db;
        }
        res.alpha[i1] = a1;
        res.alpha[i2] = a2;
        b = b_new;

#ifndef NDEBUG
        if (n <= 512) {
            const double obj_after = dual_objective(gram, n, labels, res.alpha);
            assert(obj_after >= obj_before - 1e-9 * (1.0 + std::abs(obj_before)) &&
                   "dual objective decreased");
        }
#endif
        return true;
    };

    auto examine = [&](std::size_t i2) -> bool {
        const int y2 = labels[i2];
        const double a2o = res.alpha[i2];
        const double r2 = err[i2] * y2;
        if (!((r2 < -tol && a2o < c - kAlphaEps) || (r2 > tol && a2o > kAlphaEps))) return false;

        // 1: second choice maximizing |E1 - E2| among non-bound alphas.
        std::size_t best = n;
        double best_gap = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!non_bound(i)) continue;
            const double gap = std::abs(err[i] - err[i2]);
            if (gap > best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        if (best < n && take_step(best, i2)) return true;

        // 2: remaining non-bound, from a random start.
        if (n > 0) {
            const std::size_t start = static_cast<std::size_t>(rng.below(n));
            for (std::size_t off = 0; off < n; ++off) {
                const std::size_t i = (start + off) % n;
                if (non_bound(i) && take_step(i, i2)) return true;
            }
            // 3: everything, from a fresh random start.
            const std::size_t start2 = static_cast<std::size_t>(rng.below(n));
            for (std::size_t off = 0; off < n; ++off) {
                const std::size_t i = (start2 + off) % n;
                if (take_step(i, i2)) return true;
            }
        }
        return false;
    };

    bool examine_all = true;
    res.converged = false;
    while (res.passes < max_passes) {
        ++res.passes;
        int num_changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (examine_all || non_bound(i)) {
                if (examine(i)) ++num_changed;
            }
        }
        if (examine_all) {
            if (num_changed == 0) {
                res.converged = true;
                break;
            }
            examine_all = false;
        } else if (num_changed == 0) {
            examine_all = true;
        }
    }
    return res;
}

} // namespace detail

// ============================================================================
// Pairwise base cache: squared distances (rbf) or dot products (linear) over
// a sample set, shared by every binary training and CV cell.
// ============================================================================

namespace {

struct PairwiseBase {
    std::size_t n = 0;
    KernelKind kind = KernelKind::rbf;
    std::vector<double> vals;

    double operator()(std::size_t i, std::size_t j) const { return vals[i * n + j]; }
};

PairwiseBase compute_base(const std::vector<std::vector<double>>& features, KernelKind kind,
                          unsigned jobs) {
    PairwiseBase base;
    base.n = features.size();
    base.kind = kind;
    base.vals.assign(base.n * base.n, 0.0);
    parallel_for(base.n, jobs, [&](std::size_t i) {
        const auto& fi = features[i];
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = kind == KernelKind::linear
                                 ? kernels::dot(fi.data(), features[j].data(), fi.size())
                                 : kernels::squared_distance(fi.data(), features[j].data(), fi.size());
            base.vals[i * base.n + j] = v;
            base.vals[j * base.n + i] = v;
        }
    });
    return base;
}

double kernel_from_base(const PairwiseBase& base, std::size_t i, std::size_t j, double gamma) {
    const double v = base(i, j);
    return base.kind == KernelKind::linear ? v : std::exp(-gamma * v);
}

// Binary model over subset indices of a base matrix.
struct SubsetModel {
    std::vector<std::size_t> indices; // into the base sample set
    std::vector<double> signed_alpha; // only for kept (nonzero-alpha) indices
    double bias = 0.0;
    bool converged = true;
};

SubsetModel train_pair_on_base(const PairwiseBase& base, const std::vector<std::size_t>& subset,
                               const std::vector<int>& y, double c, double gamma, double tol,
                               int max_passes, std::uint64_t seed) {
    const std::size_t m = subset.size();
    std::vector<double> gram(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = kernel_from_base(base, subset[i], subset[j], gamma);
            gram[i * m + j] = v;
            gram[j * m + i] = v;
        }
    }
    const auto res = detail::smo_solve(gram, m, y, c, tol, max_passes, seed);

    SubsetModel model;
    model.bias = res.bias;
    model.converged = res.converged;
    for (std::size_t i = 0; i < m; ++i) {
        if (res.alpha[i] > 0.0) {
            model.indices.push_back(subset[i]);
            model.signed_alpha.push_back(res.alpha[i] * y[i]);
        }
    }
    return model;
}

double decision_on_base(const PairwiseBase& base, const SubsetModel& model, std::size_t sample,
                        double gamma) {
    double f = model.bias;
    for (std::size_t i = 0; i < model.indices.size(); ++i) {
        f += model.signed_alpha[i] * kernel_from_base(base, model.indices[i], sample, gamma);
    }
    return f;
}

std::vector<DensityLabel> present_classes(const std::vector<DensityLabel>& labels) {
    bool seen[kLabelCount] = {};
    for (DensityLabel l : labels) seen[static_cast<std::size_t>(l)] = true;
    std::vector<DensityLabel> classes;
    for (int i = 0; i < kLabelCount; ++i) {
        if (seen[i]) classes.push_back(static_cast<DensityLabel>(i));
    }
    return classes;
}

} // namespace

// ============================================================================
// Public binary API
// ============================================================================

BinaryModel train_binary(const std::vector<std::vector<double>>& samples,
                         const std::vector<int>& labels, const SvmTrainParams& params) {
    params.validate();
    if (samples.size() != labels.size()) {
        raise(Errc::length_mismatch, "samples and labels differ in length");
    }
    bool has_pos = false, has_neg = false;
    for (int y : labels) {
        if (y == 1) has_pos = true;
        else if (y == -1) has_neg = true;
        else raise(Errc::invalid_config, "binary labels must be +1 or -1");
    }
    if (!has_pos || !has_neg) raise(Errc::single_class, "need at least one sample of each label");
    const std::size_t dim = samples.front().size();
    for (const auto& s : samples) {
        if (s.size() != dim) raise(Errc::dimension_mismatch, "samples have mixed dimensions");
    }

    const PairwiseBase base = compute_base(samples, params.kernel.kind, 1);
    std::vector<std::size_t> all(samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const SubsetModel sub = train_pair_on_base(base, all, labels, params.C, params.kernel.gamma,
                                               params.tol, params.max_passes, params.seed);

    BinaryModel model;
    model.kernel = params.kernel;
    model.bias = sub.bias;
    model.converged = sub.converged;
    model.support_vectors.reserve(sub.indices.size());
    for (std::size_t i = 0; i < sub.indices.size(); ++i) {
        model.support_vectors.push_back(samples[sub.indices[i]]);
        model.alphas.push_back(sub.signed_alpha[i]);
    }
    return model;
}

double decision_value(const BinaryModel& model, const std::vector<double>& x) {
    double f = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
        f += model.alphas[i] * kernel_eval(model.support_vectors[i], x, model.kernel);
    }
    return f;
}

// ============================================================================
// One-vs-one multiclass
// ============================================================================

bool MulticlassModel::all_converged() const {
    return std::all_of(pairwise.begin(), pairwise.end(),
                       [](const BinaryModel& m) { return m.converged; });
}

MulticlassModel train_multiclass(const std::vector<std::vector<double>>& features,
                                 const std::vector<DensityLabel>& labels,
                                 const SvmTrainParams& params, unsigned jobs) {
    params.validate();
    if (features.size() != labels.size()) {
        raise(Errc::length_mismatch, "features and labels differ in length");
    }
    if (features.empty()) raise(Errc::empty, "no training samples");
    const auto classes = present_classes(labels);
    if (classes.size() < 2) raise(Errc::single_class, "need at least 2 classes to train");
    const std::size_t dim = features.front().size();
    for (const auto& f : features) {
        if (f.size() != dim) raise(Errc::dimension_mismatch, "features have mixed dimensions");
    }

    MulticlassModel model;
    model.classes = classes;
    model.params = params;
    model.feature_dim = static_cast<std::uint32_t>(dim);
    for (std::uint8_t a = 0; a < classes.size(); ++a) {
        for (std::uint8_t b = static_cast<std::uint8_t>(a + 1); b < classes.size(); ++b) {
            model.pair_classes.emplace_back(a, b);
        }
    }
    model.pairwise.resize(model.pair_classes.size());

    const PairwiseBase base = compute_base(features, params.kernel.kind, jobs);
    parallel_for(model.pair_classes.size(), jobs, [&](std::size_t p) {
        const auto [ca, cb] = model.pair_classes[p];
        std::vector<std::size_t> subset;
        std::vector<int> y;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == model.classes[ca]) {
                subset.push_back(i);
                y.push_back(1);
            } else if (labels[i] == model.classes[cb]) {
                subset.push_back(i);
                y.push_back(-1);
            }
        }
        const SubsetModel sub =
            train_pair_on_base(base, subset, y, params.C, params.kernel.gamma, params.tol,
                               params.max_passes, derive_seed(params.seed, {0xB19A17ull, p}));
        BinaryModel& bm = model.pairwise[p];
        bm.kernel = params.kernel;
        bm.bias = sub.bias;
        bm.converged = sub.converged;
        for (std::size_t i = 0; i < sub.indices.size(); ++i) {
            bm.support_vectors.push_back(features[sub.indices[i]]);
            bm.alphas.push_back(sub.signed_alpha[i]);
        }
    });
    return model;
}

std::pair<DensityLabel, std::vector<int>> predict(const MulticlassModel& model,
                                                  const std::vector<double>& x) {
    if (model.feature_dim != 0 && x.size() != model.feature_dim) {
        raise(Errc::dimension_mismatch, "probe has dimension " + std::to_string(x.size()) +
                                            ", model expects " + std::to_string(model.feature_dim));
    }
    std::vector<int> votes(model.classes.size(), 0);
    for (std::size_t p = 0; p < model.pairwise.size(); ++p) {
        const auto [ca, cb] = model.pair_classes[p];
        const double f = decision_value(model.pairwise[p], x);
        ++votes[f >= 0.0 ? ca : cb];
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < votes.size(); ++i) {
        if (votes[i] > votes[best]) best = i; // ties keep the lower class
    }
    return {model.classes[best], votes};
}

// ============================================================================
// Grid-search cross-validation
// ============================================================================

GridSearchResult grid_search_cv(const std::vector<std::vector<double>>& features,
                                const std::vector<DensityLabel>& labels,
                                const std::vector<double>& c_grid,
                                const std::vector<double>& gamma_grid, int k_folds,
                                std::uint64_t seed, const SvmTrainParams& base_params,
                                unsigned jobs) {
    if (k_folds < 2) raise(Errc::invalid_config, "k_folds must be >= 2");
    if (c_grid.empty() || gamma_grid.empty()) raise(Errc::invalid_config, "empty grid");
    if (features.size() != labels.size()) {
        raise(Errc::length_mismatch, "features and labels differ in length");
    }
    const auto classes = present_classes(labels);
    if (classes.size() < 2) raise(Errc::single_class, "need at least 2 classes");

    // Stratified folds: per class, seeded shuffle then round-robin deal.
    std::vector<int> fold_of(labels.size(), -1);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == classes[c]) members.push_back(i);
        }
        if (members.size() < 2) {
            raise(Errc::insufficient_samples, std::string("class ") + label_name(classes[c]) +
                                                  " has fewer than 2 samples");
        }
        Rng rng(derive_seed(seed, {0xF01D5ull, c}));
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) {
            fold_of[members[i]] = static_cast<int>(i % static_cast<std::size_t>(k_folds));
        }
    }

    const PairwiseBase base = compute_base(features, base_params.kernel.kind, jobs);
    const std::size_t cells = c_grid.size() * gamma_grid.size();
    std::vector<double> fold_acc(cells * static_cast<std::size_t>(k_folds), 0.0);

    parallel_for(cells * static_cast<std::size_t>(k_folds), jobs, [&](std::size_t task) {
        const std::size_t cell = task / static_cast<std::size_t>(k_folds);
        const int fold = static_cast<int>(task % static_cast<std::size_t>(k_folds));
        const double c_val = c_grid[cell / gamma_grid.size()];
        const double gamma = gamma_grid[cell % gamma_grid.size()];

        std::vector<std::size_t> val_idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (fold_of[i] == fold) val_idx.push_back(i);
        }
        if (val_idx.empty()) return; // fold accuracy stays 0 on an empty fold

        // Train a one-vs-one set on the other folds.
        std::vector<SubsetModel> pair_models;
        std::vector<std::pair<std::size_t, std::size_t>> pair_ids;
        for (std::size_t a = 0; a < classes.size(); ++a) {
            for (std::size_t b = a + 1; b < classes.size(); ++b) {
                std::vector<std::size_t> subset;
                std::vector<int> y;
                for (std::size_t i = 0; i < labels.size(); ++i) {
                    if (fold_of[i] == fold) continue;
                    if (labels[i] == classes[a]) {
                        subset.push_back(i);
                        y.push_back(1);
                    } else if (labels[i] == classes[b]) {
                        subset.push_back(i);
                        y.push_back(-1);
                    }
                }
                pair_models.push_back(train_pair_on_base(
                    base, subset, y, c_val, gamma, base_params.tol, base_params.max_passes,
                    derive_seed(seed, {0xCE11ull, task, pair_ids.size()})));
                pair_ids.emplace_back(a, b);
            }
        }

        std::size_t correct = 0;
        for (std::size_t v : val_idx) {
            std::vector<int> votes(classes.size(), 0);
            for (std::size_t p = 0; p < pair_models.size(); ++p) {
                const double f = decision_on_base(base, pair_models[p], v, gamma);
                ++votes[f >= 0.0 ? pair_ids[p].first : pair_ids[p].second];
            }
            std::size_t best = 0;
            for (std::size_t i = 1; i < votes.size(); ++i) {
                if (votes[i] > votes[best]) best = i;
            }
            if (classes[best] == labels[v]) ++correct;
        }
        fold_acc[cell * static_cast<std::size_t>(k_folds) + static_cast<std::size_t>(fold)] =
            static_cast<double>(correct) / static_cast<double>(val_idx.size());
    });

    GridSearchResult result;
    result.mean_accuracies.resize(cells);
    bool have_best = false;
    double best_mean = -1.0;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        double mean = 0.0;
        for (int f = 0; f < k_folds; ++f) {
            mean += fold_acc[cell * static_cast<std::size_t>(k_folds) + static_cast<std::size_t>(f)];
        }
        mean /= static_cast<double>(k_folds);
        result.mean_accuracies[cell] = mean;

        const double c_val = c_grid[cell / gamma_grid.size()];
        const double gamma = gamma_grid[cell % gamma_grid.size()];
        const bool better = !have_best || mean > best_mean ||
                            (mean == best_mean &&
                             (c_val < result.best_c ||
                              (c_val == result.best_c && gamma < result.best_gamma)));
        if (better) {
            have_best = true;
            best_mean = mean;
            result.best_c = c_val;
            result.best_gamma = gamma;
            result.best_fold_accuracies.assign(
                fold_acc.begin() + static_cast<std::ptrdiff_t>(cell * static_cast<std::size_t>(k_folds)),
                fold_acc.begin() +
                    static_cast<std::ptrdiff_t>((cell + 1) * static_cast<std::size_t>(k_folds)));
        }
    }
    return result;
}

// ============================================================================
// Serialization: magic "CLBPSVM", little-endian fields, trailing CRC32.
// ============================================================================

namespace {

constexpr char kMagic[7] = {'C', 'L', 'B', 'P', 'S', 'V', 'M'};

struct ByteWriter {
    std::vector<std::uint8_t> bytes;

    void put_u8(std::uint8_t v) { bytes.push_back(v); }
    void put_u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void put_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }
};

struct ByteReader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) raise(Errc::checksum_mismatch, "model file ends mid-field");
    }
    std::uint8_t get_u8() {
        need(1);
        return bytes[pos++];
    }
    std::uint32_t get_u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    std::uint64_t get_u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    double get_f64() { return std::bit_cast<double>(get_u64()); }
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

} // namespace

void save_model(const MulticlassModel& model, const std::filesystem::path& path) {
    ByteWriter w;
    w.bytes.insert(w.bytes.end(), kMagic, kMagic + sizeof(kMagic));
    w.put_u32(model.format_version);
    w.put_f64(model.descriptor.radius);
    w.put_u32(static_cast<std::uint32_t>(model.descriptor.points));
    w.put_u8(static_cast<std::uint8_t>(model.descriptor.mapping));
    w.put_u8(static_cast<std::uint8_t>(model.descriptor.scheme));
    w.put_u32(static_cast<std::uint32_t>(model.block_size));
    w.put_u32(static_cast<std::uint32_t>(model.cell_size));
    w.put_f64(model.overlap);
    w.put_u32(model.feature_dim);
    w.put_f64(model.params.C);
    w.put_u8(static_cast<std::uint8_t>(model.params.kernel.kind));
    w.put_f64(model.params.kernel.gamma);
    w.put_f64(model.params.tol);
    w.put_u32(static_cast<std::uint32_t>(model.params.max_passes));
    w.put_u64(model.params.seed);

    w.put_u8(static_cast<std::uint8_t>(model.classes.size()));
    for (DensityLabel c : model.classes) w.put_u8(static_cast<std::uint8_t>(c));
    w.put_u32(static_cast<std::uint32_t>(model.pairwise.size()));
    for (std::size_t p = 0; p < model.pairwise.size(); ++p) {
        const BinaryModel& bm = model.pairwise[p];
        w.put_u8(model.pair_classes[p].first);
        w.put_u8(model.pair_classes[p].second);
        w.put_u8(bm.converged ? 1 : 0);
        w.put_f64(bm.bias);
        w.put_u32(static_cast<std::uint32_t>(bm.support_vectors.size()));
        for (std::size_t i = 0; i < bm.support_vectors.size(); ++i) {
            w.put_f64(bm.alphas[i]);
            for (double v : bm.support_vectors[i]) w.put_f64(v);
        }
    }
    w.put_u32(crc_of(w.bytes.data(), w.bytes.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(w.bytes.data()),
              static_cast<std::streamsize>(w.bytes.size()));
    if (!out) raise(Errc::io_error, "short write to " + path.string());
}

MulticlassModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::file_not_found, path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof(kMagic) + 8) {
        raise(Errc::checksum_mismatch, "model file truncated: " + path.string());
    }
    const std::uint32_t stored_crc = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                                     (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8) |
                                     (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16) |
                                     (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
    if (crc_of(bytes.data(), bytes.size() - 4) != stored_crc) {
        raise(Errc::checksum_mismatch, "model file CRC32 mismatch: " + path.string());
    }
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        raise(Errc::checksum_mismatch, "bad model magic in " + path.string());
    }

    ByteReader r{bytes, sizeof(kMagic)};
    MulticlassModel model;
    model.format_version = r.get_u32();
    if (model.format_version > kModelFormatVersion) {
        raise(Errc::version_mismatch, "model format_version " + std::to_string(model.format_version) +
                                          " is newer than supported version " +
                                          std::to_string(kModelFormatVersion));
    }
    model.descriptor.radius = r.get_f64();
    model.descriptor.points = static_cast<int>(r.get_u32());
    model.descriptor.mapping = static_cast<Mapping>(r.get_u8());
    model.descriptor.scheme = static_cast<Scheme>(r.get_u8());
    model.block_size = static_cast<int>(r.get_u32());
    model.cell_size = static_cast<int>(r.get_u32());
    model.overlap = r.get_f64();
    model.feature_dim = r.get_u32();
    model.params.C = r.get_f64();
    model.params.kernel.kind = static_cast<KernelKind>(r.get_u8());
    model.params.kernel.gamma = r.get_f64();
    model.params.tol = r.get_f64();
    model.params.max_passes = static_cast<int>(r.get_u32());
    model.params.seed = r.get_u64();

    const std::size_t class_count = r.get_u8();
    for (std::size_t i = 0; i < class_count; ++i) {
        model.classes.push_back(static_cast<DensityLabel>(r.get_u8()));
    }
    const std::size_t pair_count = r.get_u32();
    for (std::size_t p = 0; p < pair_count; ++p) {
        const std::uint8_t ca = r.get_u8();
        const std::uint8_t cb = r.get_u8();
        model.pair_classes.emplace_back(ca, cb);
        BinaryModel bm;
        bm.kernel = model.params.kernel;
        bm.converged = r.get_u8() != 0;
        bm.bias = r.get_f64();
        const std::size_t sv_count = r.get_u32();
        bm.alphas.reserve(sv_count);
        bm.support_vectors.reserve(sv_count);
        for (std::size_t i = 0; i < sv_count; ++i) {
            bm.alphas.push_back(r.get_f64());
            std::vector<double> sv(model.feature_dim);
            for (auto& v : sv) v = r.get_f64();
            bm.support_vectors.push_back(std::move(sv));
        }
        model.pairwise.push_back(std::move(bm));
    }
    return model;
}

} // namespace crowdtex
