#include "groupenc/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "groupenc/errors.hpp"
#include "groupenc/kernels.hpp"
#include "groupenc/rng.hpp"
#include "groupenc/text_format.hpp"

static_assert(std::endian::native == std::endian::little,
              "matrix containers assume a little-endian host");

namespace groupenc {

namespace {

constexpr char kMatrixMagic[4] = {'G', 'M', 'T', 'X'};
constexpr char kPcaMagic[4] = {'G', 'P', 'C', 'A'};
constexpr std::uint32_t kContainerVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path, const char* what) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (static_cast<std::size_t>(in.gcount()) != sizeof(T)) {
        throw FormatError(path + ": truncated while reading " + what);
    }
    return value;
}

bool parse_cell(std::string_view cell, double& value) {
    // Trim surrounding spaces and an optional CR left by Windows endings.
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) {
        cell.remove_prefix(1);
    }
    while (!cell.empty() &&
           (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
        cell.remove_suffix(1);
    }
    if (cell.empty()) {
        return false;
    }
    const auto result = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    return result.ec == std::errc{} && result.ptr == cell.data() + cell.size();
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string::size_type start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

LoadedMatrix load_matrix_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open file: " + path);
    }
    LoadedMatrix loaded;
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t line_number = 0;
    std::size_t data_rows = 0;
    char delim = ',';
    std::string line;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) {
            continue;
        }
        if (line_number == 1) {
            delim = line.find('\t') != std::string::npos ? '\t' : ',';
        }
        const std::vector<std::string> cells = split_line(line, delim);
        if (cols == 0) {
            cols = cells.size();
        } else if (cells.size() != cols) {
            throw FormatError(path + ":" + std::to_string(line_number) +
                              ": ragged row, expected " + std::to_string(cols) +
                              " cells, got " + std::to_string(cells.size()));
        }
        bool numeric = true;
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!parse_cell(cells[c], row[c])) {
                numeric = false;
                if (data_rows > 0 || line_number > 1) {
                    throw FormatError(path + ":" + std::to_string(line_number) +
                                      ": non-numeric cell '" + cells[c] + "'");
                }
                break;
            }
        }
        if (!numeric) {
            // Non-numeric first row: header with column labels.
            loaded.column_labels.assign(cells.begin(), cells.end());
            for (std::string& label : loaded.column_labels) {
                while (!label.empty() && label.back() == '\r') {
                    label.pop_back();
                }
            }
            continue;
        }
        values.insert(values.end(), row.begin(), row.end());
        ++data_rows;
    }
    if (data_rows == 0 || cols == 0) {
        throw FormatError(path + ": no numeric rows");
    }
    loaded.data = DenseMatrix(data_rows, cols);
    loaded.data.data() = std::move(values);
    return loaded;
}

LoadedMatrix load_matrix_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open file: " + path);
    }
    char magic[4];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMatrixMagic, 4) != 0) {
        throw FormatError(path + ": bad magic, not a GMTX matrix (offset 0)");
    }
    const auto version = read_pod<std::uint32_t>(in, path, "version");
    if (version != kContainerVersion) {
        throw FormatError(path + ": unsupported GMTX version " + std::to_string(version));
    }
    const auto rows = read_pod<std::uint64_t>(in, path, "row count");
    const auto cols = read_pod<std::uint64_t>(in, path, "column count");
    const auto width = read_pod<std::uint32_t>(in, path, "element width");
    if (width != 4 && width != 8) {
        throw FormatError(path + ": element width must be 4 or 8, got " +
                          std::to_string(width));
    }
    LoadedMatrix loaded;
    loaded.data = DenseMatrix(rows, cols);
    const std::size_t count = loaded.data.size();
    if (width == 8) {
        in.read(reinterpret_cast<char*>(loaded.data.data().data()),
                static_cast<std::streamsize>(count * 8));
        if (static_cast<std::size_t>(in.gcount()) != count * 8) {
            throw FormatError(path + ": truncated payload");
        }
    } else {
        std::vector<float> buffer(count);
        in.read(reinterpret_cast<char*>(buffer.data()),
                static_cast<std::streamsize>(count * 4));
        if (static_cast<std::size_t>(in.gcount()) != count * 4) {
            throw FormatError(path + ": truncated payload");
        }
        for (std::size_t i = 0; i < count; ++i) {
            loaded.data.data()[i] = static_cast<double>(buffer[i]);
        }
    }
    return loaded;
}

} // namespace

LoadedMatrix load_matrix(const std::string& path, MatrixFormat format) {
    return format == MatrixFormat::delimited_text ? load_matrix_text(path)
                                                  : load_matrix_binary(path);
}

MatrixFormat sniff_matrix_format(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open file: " + path);
    }
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, sizeof(magic));
    return std::memcmp(magic, kMatrixMagic, 4) == 0 ? MatrixFormat::raw_binary
                                                    : MatrixFormat::delimited_text;
}

void save_matrix_binary(const std::string& path, const DenseMatrix& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("cannot open file for writing: " + path);
    }
    out.write(kMatrixMagic, 4);
    write_pod<std::uint32_t>(out, kContainerVersion);
    write_pod<std::uint64_t>(out, m.rows());
    write_pod<std::uint64_t>(out, m.cols());
    write_pod<std::uint32_t>(out, 8);
    out.write(reinterpret_cast<const char*>(m.data().data()),
              static_cast<std::streamsize>(m.size() * 8));
    if (!out) {
        throw FormatError("failed writing matrix: " + path);
    }
}

void save_matrix_text(const std::string& path, const DenseMatrix& m,
                      const std::vector<std::string>& column_labels) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw FormatError("cannot open file for writing: " + path);
    }
    if (!column_labels.empty()) {
        for (std::size_t c = 0; c < column_labels.size(); ++c) {
            if (c > 0) {
                out << ',';
            }
            out << column_labels[c];
        }
        out << '\n';
    }
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out << ',';
            }
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    if (!out) {
        throw FormatError("failed writing matrix: " + path);
    }
}

DenseMatrix normalize_rows(const DenseMatrix& counts, std::vector<std::size_t>* zero_rows) {
    std::vector<double> totals(counts.rows(), 0.0);
    for (Index i = 0; i < counts.rows(); ++i) {
        const double* row = counts.row_ptr(i);
        double total = 0.0;
        for (Index j = 0; j < counts.cols(); ++j) {
            if (row[j] < 0.0) {
                throw NumericError("normalize_rows: negative entry at row " +
                                   std::to_string(i));
            }
            total += row[j];
        }
        totals[i] = total;
    }
    const double mean_total =
        std::accumulate(totals.begin(), totals.end(), 0.0) / static_cast<double>(counts.rows());

    DenseMatrix out = counts;
    for (Index i = 0; i < counts.rows(); ++i) {
        if (totals[i] <= 0.0) {
            if (zero_rows != nullptr) {
                zero_rows->push_back(i);
            }
            continue;
        }
        const double scale = mean_total / totals[i];
        double* row = out.row_ptr(i);
        for (Index j = 0; j < out.cols(); ++j) {
            row[j] *= scale;
        }
    }
    return out;
}

DenseMatrix log1p_transform(const DenseMatrix& m) {
    DenseMatrix out = m;
    for (double& v : out.data()) {
        if (v < 0.0) {
            throw NumericError("log1p_transform: negative entry");
        }
        v = std::log1p(v);
    }
    return out;
}

DenseMatrix standardize_clip(const DenseMatrix& m, double clip) {
    if (clip <= 0.0) {
        throw ConfigError("standardize_clip: clip must be positive");
    }
    const double inv_rows = 1.0 / static_cast<double>(m.rows());
    DenseMatrix out = m;
    for (Index j = 0; j < m.cols(); ++j) {
        double mean = 0.0;
        for (Index i = 0; i < m.rows(); ++i) {
            mean += m(i, j);
        }
        mean *= inv_rows;
        double var = 0.0;
        for (Index i = 0; i < m.rows(); ++i) {
            const double d = m(i, j) - mean;
            var += d * d;
        }
        var *= inv_rows;
        if (var <= 0.0) {
            for (Index i = 0; i < m.rows(); ++i) {
                out(i, j) = 0.0;
            }
            continue;
        }
        const double inv_std = 1.0 / std::sqrt(var);
        for (Index i = 0; i < m.rows(); ++i) {
            // Upper clamp only, mirroring max_value semantics.
            out(i, j) = std::min((m(i, j) - mean) * inv_std, clip);
        }
    }
    return out;
}

namespace {

std::vector<double> compute_column_means(const DenseMatrix& m) {
    std::vector<double> means = column_sums(m);
    const double inv = 1.0 / static_cast<double>(m.rows());
    for (double& v : means) {
        v *= inv;
    }
    return means;
}

DenseMatrix center_columns(const DenseMatrix& m, const std::vector<double>& means) {
    DenseMatrix centered = m;
    for (Index i = 0; i < m.rows(); ++i) {
        double* row = centered.row_ptr(i);
        for (Index j = 0; j < m.cols(); ++j) {
            row[j] -= means[j];
        }
    }
    return centered;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Deterministic,
// robust, fine up to a few hundred columns.
void jacobi_eigen_symmetric(DenseMatrix a, std::vector<double>& eigenvalues,
                            DenseMatrix& eigenvectors) {
    const Index n = a.rows();
    eigenvectors = DenseMatrix::identity(n);
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Index p = 0; p + 1 < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                off += a(p, q) * a(p, q);
            }
        }
        double diag = 0.0;
        for (Index p = 0; p < n; ++p) {
            diag += a(p, p) * a(p, p);
        }
        if (off <= 1e-30 * std::max(diag, 1e-300)) {
            break;
        }
        for (Index p = 0; p + 1 < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Index i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (Index i = 0; i < n; ++i) {
                    const double api = a(p, i);
                    const double aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (Index i = 0; i < n; ++i) {
                    const double vip = eigenvectors(i, p);
                    const double viq = eigenvectors(i, q);
                    eigenvectors(i, p) = c * vip - s * viq;
                    eigenvectors(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    eigenvalues.resize(n);
    for (Index i = 0; i < n; ++i) {
        eigenvalues[i] = a(i, i);
    }
}

void sort_eigen_descending(std::vector<double>& eigenvalues, DenseMatrix& eigenvectors) {
    const Index n = eigenvalues.size();
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        if (eigenvalues[a] != eigenvalues[b]) {
            return eigenvalues[a] > eigenvalues[b];
        }
        return a < b;
    });
    std::vector<double> sorted_values(n);
    DenseMatrix sorted_vectors(eigenvectors.rows(), n);
    for (Index c = 0; c < n; ++c) {
        sorted_values[c] = eigenvalues[order[c]];
        for (Index r = 0; r < eigenvectors.rows(); ++r) {
            sorted_vectors(r, c) = eigenvectors(r, order[c]);
        }
    }
    eigenvalues = std::move(sorted_values);
    eigenvectors = std::move(sorted_vectors);
}

// Largest-|entry| coordinate of every component made positive.
void apply_sign_convention(DenseMatrix& components, DenseMatrix* scores) {
    for (Index c = 0; c < components.cols(); ++c) {
        Index arg_max = 0;
        double best = -1.0;
        for (Index r = 0; r < components.rows(); ++r) {
            const double mag = std::abs(components(r, c));
            if (mag > best) {
                best = mag;
                arg_max = r;
            }
        }
        if (components(arg_max, c) < 0.0) {
            for (Index r = 0; r < components.rows(); ++r) {
                components(r, c) = -components(r, c);
            }
            if (scores != nullptr) {
                for (Index r = 0; r < scores->rows(); ++r) {
                    (*scores)(r, c) = -(*scores)(r, c);
                }
            }
        }
    }
}

// Modified Gram-Schmidt, in place over columns.
void orthonormalize_columns(DenseMatrix& q) {
    for (Index c = 0; c < q.cols(); ++c) {
        for (Index prev = 0; prev < c; ++prev) {
            double proj = 0.0;
            for (Index r = 0; r < q.rows(); ++r) {
                proj += q(r, c) * q(r, prev);
            }
            for (Index r = 0; r < q.rows(); ++r) {
                q(r, c) -= proj * q(r, prev);
            }
        }
        double norm = 0.0;
        for (Index r = 0; r < q.rows(); ++r) {
            norm += q(r, c) * q(r, c);
        }
        norm = std::sqrt(norm);
        if (norm < 1e-150) {
            // Rank-deficient direction: replace with a deterministic unit
            // vector and keep going.
            for (Index r = 0; r < q.rows(); ++r) {
                q(r, c) = 0.0;
            }
            q(c % q.rows(), c) = 1.0;
            continue;
        }
        const double inv = 1.0 / norm;
        for (Index r = 0; r < q.rows(); ++r) {
            q(r, c) *= inv;
        }
    }
}

PcaResult pca_dense(const DenseMatrix& centered, const std::vector<double>& means, Index k) {
    const DenseMatrix gram = matmul_transpose_a(centered, centered);
    std::vector<double> eigenvalues;
    DenseMatrix eigenvectors;
    jacobi_eigen_symmetric(gram, eigenvalues, eigenvectors);
    sort_eigen_descending(eigenvalues, eigenvectors);

    PcaResult result;
    result.model.column_means = means;
    result.model.component_matrix = DenseMatrix(centered.cols(), k);
    result.model.explained_variance.resize(k);
    const double inv_rows = 1.0 / static_cast<double>(centered.rows());
    for (Index c = 0; c < k; ++c) {
        for (Index r = 0; r < centered.cols(); ++r) {
            result.model.component_matrix(r, c) = eigenvectors(r, c);
        }
        result.model.explained_variance[c] = std::max(eigenvalues[c], 0.0) * inv_rows;
    }
    apply_sign_convention(result.model.component_matrix, nullptr);
    result.scores = matmul(centered, result.model.component_matrix);
    return result;
}

// Block subspace iteration on the Gram operator without forming it:
// Y = X^T (X Q). Top-k only, deterministic start, small Rayleigh-Ritz
// solve at the end.
PcaResult pca_iterative(const DenseMatrix& centered, const std::vector<double>& means,
                        Index k) {
    const Index cols = centered.cols();
    const Index block = std::min(cols, k + std::min<Index>(8, cols - k));

    SeededRng rng(0x9C0FFEE5u, "pca-subspace");
    DenseMatrix q(cols, block);
    rng.fill_normal(q.data());
    orthonormalize_columns(q);

    std::vector<double> ritz_prev(k, 0.0);
    const int max_iterations = 400;
    for (int iter = 0; iter < max_iterations; ++iter) {
        const DenseMatrix projected = matmul(centered, q);         // rows x block
        DenseMatrix next = matmul_transpose_a(centered, projected);  // cols x block
        orthonormalize_columns(next);
        q = std::move(next);

        // Ritz values from the small projected problem.
        const DenseMatrix xq = matmul(centered, q);
        const DenseMatrix small = matmul_transpose_a(xq, xq);  // block x block
        std::vector<double> eigenvalues;
        DenseMatrix eigenvectors;
        jacobi_eigen_symmetric(small, eigenvalues, eigenvectors);
        sort_eigen_descending(eigenvalues, eigenvectors);

        double max_change = 0.0;
        for (Index c = 0; c < k; ++c) {
            const double denom = std::max(std::abs(eigenvalues[c]), 1e-300);
            max_change = std::max(max_change,
                                  std::abs(eigenvalues[c] - ritz_prev[c]) / denom);
            ritz_prev[c] = eigenvalues[c];
        }
        if (iter >= 3 && max_change < 1e-13) {
            // Rotate the basis onto the Ritz vectors and keep the top k.
            const DenseMatrix rotated = matmul(q, eigenvectors);
            PcaResult result;
            result.model.column_means = means;
            result.model.component_matrix = DenseMatrix(cols, k);
            result.model.explained_variance.resize(k);
            const double inv_rows = 1.0 / static_cast<double>(centered.rows());
            for (Index c = 0; c < k; ++c) {
                for (Index r = 0; r < cols; ++r) {
                    result.model.component_matrix(r, c) = rotated(r, c);
                }
                result.model.explained_variance[c] =
                    std::max(eigenvalues[c], 0.0) * inv_rows;
            }
            apply_sign_convention(result.model.component_matrix, nullptr);
            result.scores = matmul(centered, result.model.component_matrix);
            return result;
        }
    }
    throw NumericError("pca_iterative: subspace iteration did not converge");
}

} // namespace

PcaResult pca_fit_transform(const DenseMatrix& m, Index k, PcaRoute route) {
    if (m.rows() < 2) {
        throw ConfigError("pca: need at least 2 rows");
    }
    if (k < 1 || k > std::min(m.rows() - 1, m.cols())) {
        throw ConfigError("pca: k must be in [1, min(rows-1, cols)], got " +
                          std::to_string(k));
    }
    const std::vector<double> means = compute_column_means(m);
    const DenseMatrix centered = center_columns(m, means);
    if (route == PcaRoute::automatic) {
        route = m.cols() <= 256 ? PcaRoute::dense : PcaRoute::iterative;
    }
    return route == PcaRoute::dense ? pca_dense(centered, means, k)
                                    : pca_iterative(centered, means, k);
}

DenseMatrix pca_transform(const PcaModel& model, const DenseMatrix& m) {
    if (m.cols() != model.component_matrix.rows()) {
        throw ShapeError("pca_transform: column count mismatch");
    }
    return matmul(center_columns(m, model.column_means), model.component_matrix);
}

DenseMatrix pca_inverse_transform(const PcaModel& model, const DenseMatrix& scores) {
    if (scores.cols() != model.component_matrix.cols()) {
        throw ShapeError("pca_inverse_transform: component count mismatch");
    }
    DenseMatrix out = matmul_transpose_b(scores, model.component_matrix);
    for (Index i = 0; i < out.rows(); ++i) {
        double* row = out.row_ptr(i);
        for (Index j = 0; j < out.cols(); ++j) {
            row[j] += model.column_means[j];
        }
    }
    return out;
}

void save_pca_model(const std::string& path, const PcaModel& model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("cannot open file for writing: " + path);
    }
    out.write(kPcaMagic, 4);
    write_pod<std::uint32_t>(out, kContainerVersion);
    write_pod<std::uint64_t>(out, model.component_matrix.rows());
    write_pod<std::uint64_t>(out, model.component_matrix.cols());
    out.write(reinterpret_cast<const char*>(model.column_means.data()),
              static_cast<std::streamsize>(model.column_means.size() * 8));
    out.write(reinterpret_cast<const char*>(model.component_matrix.data().data()),
              static_cast<std::streamsize>(model.component_matrix.size() * 8));
    out.write(reinterpret_cast<const char*>(model.explained_variance.data()),
              static_cast<std::streamsize>(model.explained_variance.size() * 8));
    if (!out) {
        throw FormatError("failed writing PCA model: " + path);
    }
}

PcaModel load_pca_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open file: " + path);
    }
    char magic[4];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kPcaMagic, 4) != 0) {
        throw FormatError(path + ": bad magic, not a GPCA model (offset 0)");
    }
    const auto version = read_pod<std::uint32_t>(in, path, "version");
    if (version != kContainerVersion) {
        throw FormatError(path + ": unsupported GPCA version " + std::to_string(version));
    }
    const auto cols = read_pod<std::uint64_t>(in, path, "column count");
    const auto k = read_pod<std::uint64_t>(in, path, "component count");
    PcaModel model;
    model.column_means.resize(cols);
    model.component_matrix = DenseMatrix(cols, k);
    model.explained_variance.resize(k);
    in.read(reinterpret_cast<char*>(model.column_means.data()),
            static_cast<std::streamsize>(cols * 8));
    in.read(reinterpret_cast<char*>(model.component_matrix.data().data()),
            static_cast<std::streamsize>(model.component_matrix.size() * 8));
    in.read(reinterpret_cast<char*>(model.explained_variance.data()),
            static_cast<std::streamsize>(k * 8));
    if (!in) {
        throw FormatError(path + ": truncated GPCA payload");
    }
    return model;
}

void PreprocessConfig::validate() const {
    if (scale_clip <= 0.0) {
        throw ConfigError("preprocess: scale_clip must be positive");
    }
    if (pca && pca_components < 1) {
        throw ConfigError("preprocess: pca_components must be at least 1");
    }
}

PreprocessResult preprocess(const DenseMatrix& m, const PreprocessConfig& config) {
    config.validate();
    PreprocessResult result;
    DenseMatrix working = m;
    const bool run_counts_stages = !config.skip_row_normalize_and_log;
    if (run_counts_stages && config.row_normalize) {
        working = normalize_rows(working, &result.zero_rows);
    }
    if (run_counts_stages && config.log1p) {
        working = log1p_transform(working);
    }
    if (config.standardize) {
        working = standardize_clip(working, config.scale_clip);
    }
    if (config.pca) {
        const Index k = std::min<Index>(config.pca_components,
                                        std::min(working.rows() - 1, working.cols()));
        PcaResult pca = pca_fit_transform(working, k);
        result.pca = std::move(pca.model);
        working = std::move(pca.scores);
    }
    result.data = std::move(working);
    return result;
}

} // namespace groupenc
