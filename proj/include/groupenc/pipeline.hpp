#pragma once

#include <optional>
#include <string>
#include <vector>

#include "groupenc/matrix.hpp"

namespace groupenc {

// Ingestion and the preprocessing chain: per-row count normalisation,
// log1p, per-column standardisation with an upper clip, PCA.

enum class MatrixFormat { delimited_text, raw_binary };

struct LoadedMatrix {
    DenseMatrix data;
    std::vector<std::string> column_labels;  // empty when no header row
};

/// delimited_text: comma or tab separated, one sample per row, a single
/// non-numeric first row is treated as a header. raw_binary: the "GMTX"
/// container (64-bit round-trips are bit-exact).
LoadedMatrix load_matrix(const std::string& path, MatrixFormat format);

/// Reads the leading magic bytes to pick the format.
MatrixFormat sniff_matrix_format(const std::string& path);

void save_matrix_binary(const std::string& path, const DenseMatrix& m);
void save_matrix_text(const std::string& path, const DenseMatrix& m,
                      const std::vector<std::string>& column_labels = {});

/// Scales each row so its sum equals the mean of the original row sums.
/// All-zero rows are left as zeros and reported through `zero_rows`.
DenseMatrix normalize_rows(const DenseMatrix& counts,
                           std::vector<std::size_t>* zero_rows = nullptr);

/// Elementwise log(1 + x); entries must be non-negative.
DenseMatrix log1p_transform(const DenseMatrix& m);

/// Columns shifted to mean 0 and population-variance 1 (zero-variance
/// columns become 0), then clamped from above at +clip.
DenseMatrix standardize_clip(const DenseMatrix& m, double clip);

struct PcaModel {
    DenseMatrix component_matrix;            // cols x k, orthonormal columns
    std::vector<double> column_means;        // length cols
    std::vector<double> explained_variance;  // length k, non-increasing
};

enum class PcaRoute {
    automatic,  // dense for narrow inputs, iterative for wide ones
    dense,      // Jacobi eigendecomposition of the Gram matrix
    iterative,  // matrix-free block subspace iteration, top-k only
};

struct PcaResult {
    PcaModel model;
    DenseMatrix scores;  // rows x k
};

/// Column-centred PCA. Sign convention: each component's entry of largest
/// magnitude is positive. The two routes agree to ~1e-6 on overlapping
/// cases and are equivalence-tested against each other.
PcaResult pca_fit_transform(const DenseMatrix& m, Index k,
                            PcaRoute route = PcaRoute::automatic);

/// (m - column_means) * components.
DenseMatrix pca_transform(const PcaModel& model, const DenseMatrix& m);

/// scores * components^T + column_means.
DenseMatrix pca_inverse_transform(const PcaModel& model, const DenseMatrix& scores);

void save_pca_model(const std::string& path, const PcaModel& model);
PcaModel load_pca_model(const std::string& path);

struct PreprocessConfig {
    bool row_normalize = true;
    bool log1p = true;
    bool standardize = true;
    double scale_clip = 10.0;
    bool pca = true;
    Index pca_components = 50;
    bool skip_row_normalize_and_log = false;  // pre-scaled data

    void validate() const;
};

struct PreprocessResult {
    DenseMatrix data;
    std::optional<PcaModel> pca;
    std::vector<std::size_t> zero_rows;
};

/// Enabled stages in the fixed order normalize -> log1p -> standardize ->
/// pca; the skip flag bypasses the first two.
PreprocessResult preprocess(const DenseMatrix& m, const PreprocessConfig& config);

} // namespace groupenc
