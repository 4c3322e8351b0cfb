#pragma once

// Greedy orthogonal matching pursuit: a reference single-signal solver that keeps the
// residual explicitly, and Batch-OMP, which works from the Gram matrix D'D and the
// projections D'y with a progressive Cholesky factorization of the active set.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "sparsesr/error.hpp"
#include "sparsesr/parallel.hpp"

namespace sparsesr {

using Index = Eigen::Index;

/// Column-normalized atom matrix (m × N_D).
class Dictionary {
public:
    static constexpr double norm_tolerance = 1e-10;

    Dictionary() = default;

    explicit Dictionary(Eigen::MatrixXd atoms) : atoms_(std::move(atoms)) {
        detail::require(atoms_.cols() >= 1 && atoms_.rows() >= 1, ErrorCode::invalid_argument,
                        "dictionary needs at least one atom");
        detail::require(atoms_.allFinite(), ErrorCode::non_finite, "dictionary has non-finite entries");
        for (Index j = 0; j < atoms_.cols(); ++j)
            detail::require(std::abs(atoms_.col(j).norm() - 1.0) <= norm_tolerance, ErrorCode::invalid_argument,
                            "dictionary atoms must have unit norm");
    }

    /// Scales every column to unit norm; `scales` (if given) receives the original norms.
    static Dictionary normalized(Eigen::MatrixXd atoms, Eigen::VectorXd* scales = nullptr) {
        Eigen::VectorXd norms = atoms.colwise().norm().transpose();
        for (Index j = 0; j < atoms.cols(); ++j) {
            detail::require(norms[j] > 0.0 && std::isfinite(norms[j]), ErrorCode::invalid_argument,
                            "cannot normalize a zero or non-finite atom");
            atoms.col(j) /= norms[j];
        }
        if (scales) *scales = norms;
        return Dictionary(std::move(atoms));
    }

    [[nodiscard]] const Eigen::MatrixXd& atoms() const noexcept { return atoms_; }
    [[nodiscard]] Index atom_dim() const noexcept { return atoms_.rows(); }
    [[nodiscard]] Index atom_count() const noexcept { return atoms_.cols(); }

private:
    Eigen::MatrixXd atoms_;
};

struct PursuitParams {
    int k0 = 1;
    double epsilon = 0.0;

    void validate() const {
        detail::require(k0 >= 1, ErrorCode::invalid_argument, "k0 must be at least 1");
        detail::require(epsilon >= 0.0 && epsilon < 1.0, ErrorCode::invalid_argument, "epsilon must lie in [0, 1)");
    }
};

/// Relative residual below which a signal counts as exactly represented. The Gram-based
/// residual in Batch-OMP carries ~1e-8 relative rounding, so both solvers share this floor.
inline constexpr double residual_floor = 1e-7;

/// Cholesky pivots (Schur complements) below this mark the active set as rank deficient.
inline constexpr double pivot_floor = 1e-12;

/// One sparse column: strictly increasing atom indices with their coefficients.
struct SparseColumn {
    std::vector<Index> indices;
    std::vector<double> values;

    [[nodiscard]] std::size_t nonzeros() const noexcept { return indices.size(); }
    [[nodiscard]] bool empty() const noexcept { return indices.empty(); }

    [[nodiscard]] double coefficient(Index atom) const noexcept {
        const auto it = std::lower_bound(indices.begin(), indices.end(), atom);
        return (it != indices.end() && *it == atom) ? values[static_cast<std::size_t>(it - indices.begin())] : 0.0;
    }

    friend bool operator==(const SparseColumn&, const SparseColumn&) = default;
};

/// N_D × N sparse coefficient matrix stored by column.
struct SparseCode {
    Index atom_count = 0;
    int cardinality_bound = 0;
    std::vector<SparseColumn> columns;
    std::vector<double> relative_residuals; ///< per column, ‖y − Dx‖/‖y‖ at exit (0 for zero signals)

    [[nodiscard]] std::size_t size() const noexcept { return columns.size(); }
};

namespace detail {

/// Sorts a support (in selection order) and its coefficients by atom index.
inline SparseColumn make_sorted_column(const std::vector<Index>& support, const Eigen::VectorXd& coeffs) {
    std::vector<std::size_t> order(support.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
    SparseColumn col;
    col.indices.reserve(order.size());
    col.values.reserve(order.size());
    for (auto k : order) {
        col.indices.push_back(support[k]);
        col.values.push_back(coeffs[static_cast<Index>(k)]);
    }
    return col;
}

/// Lower-triangular factor of the active-set Gram matrix, grown one atom at a time.
class ProgressiveCholesky {
public:
    explicit ProgressiveCholesky(Index capacity) : l_(Eigen::MatrixXd::Zero(capacity, capacity)) {}

    /// Appends an atom given its inner products with the active atoms and its own squared norm.
    /// Returns false (leaving the factor unchanged) when the new pivot is below pivot_floor.
    bool append(const Eigen::Ref<const Eigen::VectorXd>& cross, double self) {
        const Index k = size_;
        if (k == 0) {
            if (self < pivot_floor) return false;
            l_(0, 0) = std::sqrt(self);
            size_ = 1;
            return true;
        }
        Eigen::VectorXd w = l_.topLeftCorner(k, k).triangularView<Eigen::Lower>().solve(cross);
        const double pivot = self - w.squaredNorm();
        if (pivot < pivot_floor) return false;
        l_.row(k).head(k) = w.transpose();
        l_(k, k) = std::sqrt(pivot);
        ++size_;
        return true;
    }

    /// Solves (L Lᵀ) x = rhs for the current active set.
    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        const auto l = l_.topLeftCorner(size_, size_);
        Eigen::VectorXd z = l.triangularView<Eigen::Lower>().solve(rhs);
        return l.transpose().triangularView<Eigen::Upper>().solve(z);
    }

    [[nodiscard]] Index size() const noexcept { return size_; }

private:
    Eigen::MatrixXd l_;
    Index size_ = 0;
};

inline Index argmax_abs_excluding(const Eigen::VectorXd& c, const std::vector<char>& selected) {
    Index best = -1;
    double best_val = -1.0;
    for (Index i = 0; i < c.size(); ++i) {
        if (selected[static_cast<std::size_t>(i)]) continue;
        const double a = std::abs(c[i]);
        if (a > best_val) { // strict: ties keep the lowest index
            best_val = a;
            best = i;
        }
    }
    return best;
}

inline bool pursuit_done(double relative_residual, const PursuitParams& params) {
    return relative_residual < params.epsilon || relative_residual <= residual_floor;
}

} // namespace detail

/// Per-iteration record of one pursuit: residual norms starting with ‖y‖.
struct PursuitTrace {
    std::vector<double> residual_norms;
};

/// Orthogonal matching pursuit for a single signal, with an explicit residual.
/// Stops when ‖r‖/‖y‖ < epsilon, when k0 atoms are active, when the residual is
/// numerically zero, or when the next atom would make the active set rank deficient.
inline SparseColumn omp(const Dictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& signal,
                        const PursuitParams& params, PursuitTrace* trace = nullptr) {
    params.validate();
    const auto& d = dict.atoms();
    detail::require(signal.size() == d.rows(), ErrorCode::dimension_mismatch, "signal length differs from atom size");
    detail::require(signal.allFinite(), ErrorCode::non_finite, "signal contains NaN or infinity");
    const double y_norm = signal.norm();
    if (trace) trace->residual_norms = {y_norm};
    if (y_norm == 0.0) return {};

    const Index k_max = std::min<Index>(params.k0, d.cols());
    std::vector<Index> support;
    std::vector<char> selected(static_cast<std::size_t>(d.cols()), 0);
    detail::ProgressiveCholesky chol(k_max);
    Eigen::VectorXd residual = signal;
    Eigen::VectorXd coeffs;

    while (static_cast<Index>(support.size()) < k_max) {
        if (detail::pursuit_done(residual.norm() / y_norm, params)) break;
        const Eigen::VectorXd corr = d.transpose() * residual;
        const Index k = detail::argmax_abs_excluding(corr, selected);
        if (k < 0) break;
        Eigen::VectorXd cross(static_cast<Index>(support.size()));
        for (std::size_t i = 0; i < support.size(); ++i) cross[static_cast<Index>(i)] = d.col(support[i]).dot(d.col(k));
        if (!chol.append(cross, d.col(k).squaredNorm())) break;
        support.push_back(k);
        selected[static_cast<std::size_t>(k)] = 1;

        Eigen::MatrixXd active(d.rows(), static_cast<Index>(support.size()));
        for (std::size_t i = 0; i < support.size(); ++i) active.col(static_cast<Index>(i)) = d.col(support[i]);
        coeffs = chol.solve(active.transpose() * signal);
        residual = signal - active * coeffs;
        if (trace) trace->residual_norms.push_back(residual.norm());
    }
    if (support.empty()) return {};
    return detail::make_sorted_column(support, coeffs);
}

/// Batch-OMP: the Gram matrix is computed once and shared by every signal coded against
/// the same dictionary. Columns are independent and may run concurrently.
class BatchOmp {
public:
    explicit BatchOmp(const Dictionary& dict) : dict_(&dict), gram_(dict.atoms().transpose() * dict.atoms()) {}

    [[nodiscard]] const Eigen::MatrixXd& gram() const noexcept { return gram_; }

    /// Codes one signal from its projections alpha0 = D'y and its squared norm.
    [[nodiscard]] SparseColumn code(const Eigen::Ref<const Eigen::VectorXd>& alpha0, double y_sq_norm,
                                    const PursuitParams& params, double* relative_residual = nullptr) const {
        if (relative_residual) *relative_residual = 0.0;
        if (y_sq_norm == 0.0) return {};
        const Index atoms = gram_.rows();
        const Index k_max = std::min<Index>(params.k0, atoms);
        std::vector<Index> support;
        std::vector<char> selected(static_cast<std::size_t>(atoms), 0);
        detail::ProgressiveCholesky chol(k_max);
        Eigen::VectorXd alpha = alpha0;
        Eigen::VectorXd gamma;
        Eigen::VectorXd alpha0_active;
        double rel = 1.0;

        while (static_cast<Index>(support.size()) < k_max) {
            if (detail::pursuit_done(rel, params)) break;
            const Index k = detail::argmax_abs_excluding(alpha, selected);
            if (k < 0) break;
            Eigen::VectorXd cross(static_cast<Index>(support.size()));
            for (std::size_t i = 0; i < support.size(); ++i) cross[static_cast<Index>(i)] = gram_(support[i], k);
            if (!chol.append(cross, gram_(k, k))) break;
            support.push_back(k);
            selected[static_cast<std::size_t>(k)] = 1;

            const Index s = static_cast<Index>(support.size());
            alpha0_active.resize(s);
            for (Index i = 0; i < s; ++i) alpha0_active[i] = alpha0[support[static_cast<std::size_t>(i)]];
            gamma = chol.solve(alpha0_active);
            alpha = alpha0;
            for (Index i = 0; i < s; ++i) alpha.noalias() -= gram_.col(support[static_cast<std::size_t>(i)]) * gamma[i];
            // ‖y − D_I γ‖² = ‖y‖² − (D_I'y)'γ for the least-squares γ.
            const double err_sq = std::max(0.0, y_sq_norm - alpha0_active.dot(gamma));
            rel = std::sqrt(err_sq / y_sq_norm);
        }
        if (relative_residual) *relative_residual = support.empty() ? 1.0 : rel;
        if (support.empty()) return {};
        return detail::make_sorted_column(support, gamma);
    }

    /// Codes every column of `signals`.
    [[nodiscard]] SparseCode code_all(const Eigen::Ref<const Eigen::MatrixXd>& signals, const PursuitParams& params) const {
        params.validate();
        const auto& d = dict_->atoms();
        detail::require(signals.rows() == d.rows(), ErrorCode::dimension_mismatch,
                        "signal rows differ from atom size");
        detail::require(signals.allFinite(), ErrorCode::non_finite, "signals contain NaN or infinity");
        SparseCode out;
        out.atom_count = d.cols();
        out.cardinality_bound = params.k0;
        out.columns.resize(static_cast<std::size_t>(signals.cols()));
        out.relative_residuals.assign(static_cast<std::size_t>(signals.cols()), 0.0);
        const Index n = signals.cols();
        const Index chunks = (n + chunk_size - 1) / chunk_size;
        parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
            const Index begin = static_cast<Index>(c) * chunk_size;
            const Index len = std::min(chunk_size, n - begin);
            const Eigen::MatrixXd alpha0 = d.transpose() * signals.middleCols(begin, len);
            for (Index j = 0; j < len; ++j) {
                const auto idx = static_cast<std::size_t>(begin + j);
                out.columns[idx] = code(alpha0.col(j), signals.col(begin + j).squaredNorm(), params,
                                        &out.relative_residuals[idx]);
            }
        });
        return out;
    }

    static constexpr Index chunk_size = 64;

private:
    const Dictionary* dict_;
    Eigen::MatrixXd gram_;
};

inline SparseCode batch_omp(const Dictionary& dict, const Eigen::Ref<const Eigen::MatrixXd>& signals,
                            const PursuitParams& params) {
    return BatchOmp(dict).code_all(signals, params);
}

/// Dense product atoms·code, touching only the nonzero coefficients. `atoms` need not be
/// normalized, so the same routine applies HR sub-dictionaries to codes found on LR ones.
inline Eigen::MatrixXd reconstruct(const Eigen::Ref<const Eigen::MatrixXd>& atoms, const SparseCode& code) {
    detail::require(atoms.cols() == code.atom_count, ErrorCode::dimension_mismatch,
                    "code atom count differs from dictionary");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(atoms.rows(), static_cast<Index>(code.size()));
    for (std::size_t j = 0; j < code.size(); ++j) {
        const auto& col = code.columns[j];
        for (std::size_t i = 0; i < col.nonzeros(); ++i) {
            detail::require(col.indices[i] >= 0 && col.indices[i] < atoms.cols(), ErrorCode::dimension_mismatch,
                            "code index outside dictionary");
            out.col(static_cast<Index>(j)).noalias() += col.values[i] * atoms.col(col.indices[i]);
        }
    }
    return out;
}

inline Eigen::MatrixXd reconstruct(const Dictionary& dict, const SparseCode& code) {
    return reconstruct(dict.atoms(), code);
}

} // namespace sparsesr
