#pragma once

// Joint multi-perspective dictionary learning with K-SVD.
//
// Each sweep codes the whole concatenated training set with Batch-OMP, then updates
// atoms in ascending order: atom j and its coefficient row become the dominant singular
// pair of the residual restricted to the columns that use j. The pair is found by power
// iteration warm-started from the current atom, which can only lower the objective.
// A column keeps its previous code when the new pursuit represents it worse, and atom
// replacements are committed only when they do not raise the objective, so
// ‖T − DX‖²_F is non-increasing from sweep to sweep.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "sparsesr/dictionary.hpp"
#include "sparsesr/error.hpp"
#include "sparsesr/parallel.hpp"
#include "sparsesr/rng.hpp"
#include "sparsesr/sparse_coding.hpp"
#include "sparsesr/training_set.hpp"

namespace sparsesr {

struct LearnParams {
    std::size_t atom_count = 256;
    int k0 = 4;
    double epsilon = 0.0; ///< pursuit tolerance while learning; 0 codes to exactly k0 atoms
    std::size_t iterations = 40;
    std::uint64_t seed = 1;
    std::size_t stride = 2;       ///< recorded in the dictionary as the default enhance stride
    double duplicate_coherence = 0.999;
    int max_power_iterations = 40;
};

/// Per-sweep diagnostics.
struct KsvdSweep {
    double objective = 0.0; ///< ‖T − DX‖²_F after the sweep
    std::size_t codes_retained = 0;
    std::size_t unused_replaced = 0;
    std::size_t duplicates_replaced = 0;
    double max_norm_deviation = 0.0; ///< max |‖d_j‖ − 1|
};

struct KsvdReport {
    std::vector<KsvdSweep> sweeps;
    std::size_t monotonicity_violations = 0;
};

namespace detail {

class KsvdState {
public:
    KsvdState(const Eigen::MatrixXd& samples, const LearnParams& params)
        : t_(samples), params_(params), codes_(static_cast<std::size_t>(samples.cols())),
          errors_(static_cast<std::size_t>(samples.cols()), 0.0) {}

    void initialize() {
        const auto total = static_cast<std::size_t>(t_.cols());
        CounterRng rng(params_.seed, 0x6b737664ULL);
        std::vector<Index> pool(total);
        std::iota(pool.begin(), pool.end(), Index{0});
        d_.resize(t_.rows(), static_cast<Index>(params_.atom_count));
        for (std::size_t j = 0; j < params_.atom_count; ++j) {
            const auto pick = j + static_cast<std::size_t>(rng.below(total - j));
            std::swap(pool[j], pool[pick]);
            d_.col(static_cast<Index>(j)) = t_.col(pool[j]).normalized();
        }
    }

    [[nodiscard]] const Eigen::MatrixXd& atoms() const noexcept { return d_; }

    KsvdSweep sweep(bool have_previous) {
        KsvdSweep info;
        info.codes_retained = code_stage(have_previous);
        update_stage(info);
        info.duplicates_replaced = replace_duplicates();
        info.objective = objective();
        for (Index j = 0; j < d_.cols(); ++j)
            info.max_norm_deviation = std::max(info.max_norm_deviation, std::abs(d_.col(j).norm() - 1.0));
        return info;
    }

    [[nodiscard]] double objective() const {
        double total = 0.0;
        for (double e : errors_) total += e;
        return total;
    }

    [[nodiscard]] double column_error(Index c, const SparseColumn& code) const {
        Eigen::VectorXd r = t_.col(c);
        for (std::size_t i = 0; i < code.nonzeros(); ++i) r.noalias() -= code.values[i] * d_.col(code.indices[i]);
        return r.squaredNorm();
    }

private:
    std::size_t code_stage(bool have_previous) {
        const Dictionary dict(d_);
        const BatchOmp solver(dict);
        const PursuitParams pursuit{params_.k0, params_.epsilon};
        SparseCode fresh = solver.code_all(t_, pursuit);
        std::vector<char> retained(codes_.size(), 0);
        parallel_for(codes_.size(), [&](std::size_t c) {
            const double e_new = column_error(static_cast<Index>(c), fresh.columns[c]);
            if (have_previous && errors_[c] < e_new) {
                retained[c] = 1;
                return;
            }
            codes_[c] = std::move(fresh.columns[c]);
            errors_[c] = e_new;
        });
        return static_cast<std::size_t>(std::count(retained.begin(), retained.end(), char{1}));
    }

    std::vector<std::vector<Index>> usage() const {
        std::vector<std::vector<Index>> u(static_cast<std::size_t>(d_.cols()));
        for (std::size_t c = 0; c < codes_.size(); ++c)
            for (auto i : codes_[c].indices) u[static_cast<std::size_t>(i)].push_back(static_cast<Index>(c));
        return u;
    }

    /// Column with the largest current error; ties keep the lowest index.
    [[nodiscard]] Index worst_column() const {
        return static_cast<Index>(std::max_element(errors_.begin(), errors_.end()) - errors_.begin());
    }

    static void set_coefficient(SparseColumn& col, Index atom, double value) {
        const auto it = std::lower_bound(col.indices.begin(), col.indices.end(), atom);
        const auto pos = it - col.indices.begin();
        if (it != col.indices.end() && *it == atom) {
            col.values[static_cast<std::size_t>(pos)] = value;
        } else {
            col.indices.insert(it, atom);
            col.values.insert(col.values.begin() + pos, value);
        }
    }

    static void erase_coefficient(SparseColumn& col, Index atom) {
        const auto it = std::lower_bound(col.indices.begin(), col.indices.end(), atom);
        if (it == col.indices.end() || *it != atom) return;
        col.values.erase(col.values.begin() + (it - col.indices.begin()));
        col.indices.erase(it);
    }

    /// Replaces atom j by the normalized worst-represented column w, which is then coded by j alone.
    void replace_with_worst(Index j) {
        const Index w = worst_column();
        const double norm = t_.col(w).norm();
        d_.col(j) = t_.col(w) / norm;
        codes_[static_cast<std::size_t>(w)] = SparseColumn{{j}, {norm}};
        errors_[static_cast<std::size_t>(w)] = column_error(w, codes_[static_cast<std::size_t>(w)]);
    }

    void update_stage(KsvdSweep& info) {
        const auto users = usage();
        for (Index j = 0; j < d_.cols(); ++j) {
            std::vector<Index> omega;
            for (auto c : users[static_cast<std::size_t>(j)])
                if (codes_[static_cast<std::size_t>(c)].coefficient(j) != 0.0) omega.push_back(c);
            if (omega.empty()) {
                replace_with_worst(j);
                ++info.unused_replaced;
                continue;
            }
            update_atom(j, omega);
        }
    }

    /// Residual of columns omega[begin, begin+len) with atom j's contribution added back.
    Eigen::MatrixXd restricted_residual(Index j, const std::vector<Index>& omega, std::size_t begin,
                                        std::size_t len) const {
        Eigen::MatrixXd e(t_.rows(), static_cast<Index>(len));
        for (std::size_t k = 0; k < len; ++k) {
            const auto& code = codes_[static_cast<std::size_t>(omega[begin + k])];
            auto col = e.col(static_cast<Index>(k));
            col = t_.col(omega[begin + k]);
            for (std::size_t i = 0; i < code.nonzeros(); ++i)
                if (code.indices[i] != j) col.noalias() -= code.values[i] * d_.col(code.indices[i]);
        }
        return e;
    }

    /// Largest restricted residual held in memory at once (entries); bigger ones are
    /// regenerated chunk by chunk on every power step.
    static constexpr std::size_t residual_budget = std::size_t{1} << 24;

    void update_atom(Index j, const std::vector<Index>& omega) {
        const std::size_t rows = static_cast<std::size_t>(t_.rows());
        const bool resident = rows * omega.size() <= residual_budget;
        const std::size_t chunk = resident ? omega.size() : std::max<std::size_t>(1, residual_budget / rows);
        Eigen::MatrixXd cached;
        if (resident) cached = restricted_residual(j, omega, 0, omega.size());
        auto for_each_chunk = [&](auto&& fn) {
            if (resident) {
                fn(std::size_t{0}, cached);
                return;
            }
            for (std::size_t b = 0; b < omega.size(); b += chunk) {
                const Eigen::MatrixXd e = restricted_residual(j, omega, b, std::min(chunk, omega.size() - b));
                fn(b, e);
            }
        };
        auto project = [&](const Eigen::VectorXd& u) { // Eᵀu
            Eigen::VectorXd v(static_cast<Index>(omega.size()));
            for_each_chunk([&](std::size_t b, const Eigen::MatrixXd& e) {
                v.segment(static_cast<Index>(b), e.cols()).noalias() = e.transpose() * u;
            });
            return v;
        };
        auto expand = [&](const Eigen::VectorXd& v) { // E v
            Eigen::VectorXd out = Eigen::VectorXd::Zero(t_.rows());
            for_each_chunk([&](std::size_t b, const Eigen::MatrixXd& e) {
                out.noalias() += e * v.segment(static_cast<Index>(b), e.cols());
            });
            return out;
        };

        Eigen::VectorXd u = d_.col(j);
        Eigen::VectorXd v = project(u);
        double energy = v.squaredNorm();
        for (int it = 0; it < params_.max_power_iterations; ++it) {
            Eigen::VectorXd next = expand(v);
            const double nn = next.norm();
            if (nn == 0.0) break;
            next /= nn;
            Eigen::VectorXd next_v = project(next);
            const double next_energy = next_v.squaredNorm();
            if (next_energy < energy) break; // rounding only; keep the better pair
            const bool converged = next_energy - energy <= 1e-13 * next_energy;
            u = std::move(next);
            v = std::move(next_v);
            energy = next_energy;
            if (converged) break;
        }
        u.normalize();
        v = project(u);
        d_.col(j) = u;
        for_each_chunk([&](std::size_t b, const Eigen::MatrixXd& e) {
            for (Index k = 0; k < e.cols(); ++k) {
                const auto c = static_cast<std::size_t>(omega[b + static_cast<std::size_t>(k)]);
                const double x = v[static_cast<Index>(b) + k];
                set_coefficient(codes_[c], j, x);
                errors_[c] = (e.col(k) - x * u).squaredNorm();
            }
        });
    }

    /// For atoms nearly parallel to a lower-indexed atom: fold their coefficients onto the
    /// earlier atom and re-seed them from the worst-represented column, committed only
    /// when the total error does not grow.
    std::size_t replace_duplicates() {
        Eigen::MatrixXd gram = d_.transpose() * d_;
        std::size_t replaced = 0;
        std::vector<std::vector<Index>> users;
        bool users_valid = false;
        for (Index j = 1; j < d_.cols(); ++j) {
            Index twin = -1;
            for (Index k = 0; k < j; ++k) {
                if (std::abs(gram(k, j)) > params_.duplicate_coherence) {
                    twin = k;
                    break;
                }
            }
            if (twin < 0) continue;
            if (!users_valid) {
                users = usage();
                users_valid = true;
            }
            const double c = d_.col(j).dot(d_.col(twin));
            std::vector<Index> affected;
            std::vector<SparseColumn> saved_codes;
            std::vector<double> saved_errors;
            double delta = 0.0;
            for (auto col : users[static_cast<std::size_t>(j)]) {
                auto& code = codes_[static_cast<std::size_t>(col)];
                const double xj = code.coefficient(j);
                if (xj == 0.0) continue;
                affected.push_back(col);
                saved_codes.push_back(code);
                saved_errors.push_back(errors_[static_cast<std::size_t>(col)]);
                erase_coefficient(code, j);
                set_coefficient(code, twin, code.coefficient(twin) + c * xj);
                const double e_new = column_error(col, code);
                delta += e_new - errors_[static_cast<std::size_t>(col)];
                errors_[static_cast<std::size_t>(col)] = e_new;
            }
            const Index w = worst_column();
            const auto ww = static_cast<std::size_t>(w);
            if (delta - errors_[ww] <= 0.0) {
                replace_with_worst(j);
                ++replaced;
                users_valid = false;
                // Keep the coherence table usable for later atoms.
                const Eigen::VectorXd g = d_.transpose() * d_.col(j);
                gram.col(j) = g;
                gram.row(j) = g.transpose();
            } else {
                for (std::size_t k = 0; k < affected.size(); ++k) {
                    codes_[static_cast<std::size_t>(affected[k])] = std::move(saved_codes[k]);
                    errors_[static_cast<std::size_t>(affected[k])] = saved_errors[k];
                }
            }
        }
        return replaced;
    }

    const Eigen::MatrixXd& t_;
    LearnParams params_;
    Eigen::MatrixXd d_;
    std::vector<SparseColumn> codes_;
    std::vector<double> errors_;
};

} // namespace detail

/// Learns the joint dictionary for a training set. `on_sweep` (optional) observes each sweep.
inline JointDictionary ksvd_train(const TrainingSet& training, const LearnParams& params, KsvdReport* report = nullptr,
                                  const std::function<void(std::size_t, const KsvdSweep&)>& on_sweep = {}) {
    const auto& t = training.samples;
    detail::require(params.iterations >= 1, ErrorCode::invalid_argument, "K-SVD needs at least one iteration");
    detail::require(params.atom_count >= 1, ErrorCode::invalid_argument, "dictionary needs at least one atom");
    detail::require(static_cast<std::size_t>(t.cols()) >= params.atom_count, ErrorCode::invalid_argument,
                    "training set must have at least as many columns as atoms");
    detail::require(t.allFinite(), ErrorCode::non_finite, "training data has non-finite values");
    detail::require(static_cast<std::size_t>(t.rows()) == 2 * training.patch_size() * training.perspective_count,
                    ErrorCode::dimension_mismatch, "training rows do not match 2·n·P");
    for (Index c = 0; c < t.cols(); ++c)
        detail::require(t.col(c).squaredNorm() > 0.0, ErrorCode::invalid_argument, "training set has a zero column");

    detail::KsvdState state(t, params);
    state.initialize();
    KsvdReport local;
    for (std::size_t it = 0; it < params.iterations; ++it) {
        const KsvdSweep s = state.sweep(it > 0);
        if (!local.sweeps.empty() && s.objective > local.sweeps.back().objective * (1.0 + 1e-9))
            ++local.monotonicity_violations;
        local.sweeps.push_back(s);
        if (on_sweep) on_sweep(it, s);
    }

    JointDictionary out;
    out.patch_side = training.patch_side;
    out.perspective_count = training.perspective_count;
    out.zoom = training.zoom;
    out.stride = params.stride;
    out.noise_variance = training.noise_variance;
    out.atoms = state.atoms();
    // Power iteration leaves ‖d‖ = 1 to rounding; renormalize so the stored atoms meet the invariant exactly.
    for (Index j = 0; j < out.atoms.cols(); ++j) out.atoms.col(j).normalize();
    if (report) *report = std::move(local);
    return out;
}

} // namespace sparsesr
