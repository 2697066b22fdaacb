#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "crowdtex/clbp.hpp"
#include "crowdtex/dataset.hpp"

namespace crowdtex {

enum class KernelKind : std::uint8_t { linear = 0, rbf = 1 };

struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double gamma = 1.0; // rbf only

    void validate() const;
    bool operator==(const KernelSpec&) const = default;
};

double kernel_eval(const std::vector<double>& a, const std::vector<double>& b,
                   const KernelSpec& spec);

/// Soft-margin binary SVM in dual form. alphas are signed (alpha_i * y_i).
struct BinaryModel {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> alphas;
    double bias = 0.0;
    KernelSpec kernel;
    bool converged = true;
};

struct SvmTrainParams {
    double C = 10.0;
    KernelSpec kernel;
    double tol = 1e-3;
    int max_passes = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

BinaryModel train_binary(const std::vector<std::vector<double>>& samples,
                         const std::vector<int>& labels, const SvmTrainParams& params);

double decision_value(const BinaryModel& model, const std::vector<double>& x);

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// One-vs-one composition with majority voting. In pair (a, b), a precedes b
/// in class order and the binary model's +1 side is class a.
struct MulticlassModel {
    std::vector<DensityLabel> classes;
    std::vector<std::pair<std::uint8_t, std::uint8_t>> pair_classes; // indices into classes
    std::vector<BinaryModel> pairwise;

    // training configuration echo (serialized with the model)
    SvmTrainParams params;
    CLBPParams descriptor;
    int block_size = 0;
    int cell_size = 0;
    double overlap = 0.5;
    std::uint32_t feature_dim = 0;
    std::uint32_t format_version = kModelFormatVersion;

    bool all_converged() const;
};

MulticlassModel train_multiclass(const std::vector<std::vector<double>>& features,
                                 const std::vector<DensityLabel>& labels,
                                 const SvmTrainParams& params, unsigned jobs = 1);

/// Majority vote over all pairwise models; ties break toward the lowest
/// label in the fixed class order.
std::pair<DensityLabel, std::vector<int>> predict(const MulticlassModel& model,
                                                  const std::vector<double>& x);

struct GridSearchResult {
    double best_c = 0.0;
    double best_gamma = 0.0;
    std::vector<double> best_fold_accuracies;
    // mean validation accuracy per grid point, C-major in input order
    std::vector<double> mean_accuracies;
};

GridSearchResult grid_search_cv(const std::vector<std::vector<double>>& features,
                                const std::vector<DensityLabel>& labels,
                                const std::vector<double>& c_grid,
                                const std::vector<double>& gamma_grid, int k_folds,
                                std::uint64_t seed, const SvmTrainParams& base_params,
                                unsigned jobs = 1);

void save_model(const MulticlassModel& model, const std::filesystem::path& path);
MulticlassModel load_model(const std::filesystem::path& path);

namespace detail {

/// Full SMO state, exposed so tests can check KKT residuals per training
/// point (the public BinaryModel keeps only the support vectors).
struct SmoResult {
    std::vector<double> alpha; // unsigned, one per sample
    double bias = 0.0;
    bool converged = true;
    int passes = 0;
};

/// Sequential minimal optimization on a precomputed kernel matrix
/// (row-major n x n). Labels are +-1.
SmoResult smo_solve(const std::vector<double>& gram, std::size_t n, const std::vector<int>& labels,
                    double c, double tol, int max_passes, std::uint64_t seed);

} // namespace detail

} // namespace crowdtex
