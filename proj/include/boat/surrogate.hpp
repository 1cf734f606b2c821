// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#include "boat/common.hpp"
#include "boat/encoding.hpp"

namespace boat {

struct GpHyperparams {
    double signal_variance = 1.0;
    double noise_variance = 0.1;
    double jitter = 1e-6;
};

struct GpFitConfig {
    bool optimize = true;       // when false, keep the init as-is and only factorize
    GpHyperparams init{};
    // optional warm start overriding `init` objective-by-objective
    std::vector<GpHyperparams> per_objective_init;
    double sv_min = 1e-2, sv_max = 1e2;
    double nv_min = 1e-6, nv_max = 1.0;
    int grid = 5;
    int max_evals = 50;
};

struct Posterior {
    Eigen::VectorXd mean;      // original target scale
    Eigen::VectorXd var;       // marginal variances, clamped >= 0
    Eigen::MatrixXd cov;       // only populated when full covariance was requested
    bool full_cov = false;
};

// Cholesky factor of cov + stabilizer*I, with escalation and an
// eigenvalue-clamp fallback for rank-deficient posteriors.
Eigen::MatrixXd posterior_cholesky(const Eigen::MatrixXd& cov, double stabilizer = 1e-10);

/// Posterior over m query points in a form that lets callers assemble
/// covariance sub-blocks cheaply: cov(i,j) = scale*(sv*Tqq(i,j) - V_i.V_j).
/// Tanimoto self-similarity is 1, so marginal variances need no Tqq.
struct WhitenedPosterior {
    Eigen::VectorXd mean;  // original target scale
    Eigen::MatrixXd V;     // n x m
    double sv = 1.0;       // signal variance
    double scale = 1.0;    // y_sd^2
    bool degenerate = false;

    double cov(double tqq_ij, Eigen::Index i, Eigen::Index j) const {
        if (degenerate) return i == j ? 1.0 : 0.0;
        return scale * (sv * tqq_ij - V.col(i).dot(V.col(j)));
    }
    double var(Eigen::Index i) const {
        if (degenerate) return 1.0;
        return std::max(0.0, scale * (sv - V.col(i).squaredNorm()));
    }
};

/// Independent Tanimoto-kernel GP regression per objective over a shared set
/// of training embeddings. Targets are standardized per objective; predictions
/// are returned in the original scale.
class SurrogateModel {
public:
    static SurrogateModel fit(std::vector<Embedding> X, const Eigen::MatrixXd& Y,
                              const GpFitConfig& cfg = {});

    int objectives() const { return static_cast<int>(obj_.size()); }
    int train_size() const { return static_cast<int>(X_.size()); }
    const std::vector<Embedding>& train_inputs() const { return X_; }

    const GpHyperparams& hyperparams(int objective) const { return obj_.at(objective).hp; }
    double fitted_lml(int objective) const { return obj_.at(objective).lml; }
    bool degenerate(int objective) const { return obj_.at(objective).degenerate; }

    // Log marginal likelihood of the standardized targets at the given
    // hyperparameters (jitter from the fitted state).
    double log_marginal_likelihood(int objective, double signal_variance,
                                   double noise_variance) const;

    Posterior posterior(int objective, const std::vector<Embedding>& Xq, bool full_cov) const;

    // Tq is queries x train. The whitened form supports building per-batch
    // covariance blocks without materializing the full query covariance.
    WhitenedPosterior whitened_posterior(int objective, const Eigen::MatrixXd& Tq) const;

    // Same, from precomputed Tanimoto blocks: Tq is queries x train,
    // Tqq queries x queries (only its diagonal is used unless full_cov).
    Posterior posterior_from_gram(int objective, const Eigen::MatrixXd& Tq,
                                  const Eigen::MatrixXd& Tqq, bool full_cov) const;

    // Joint Gaussian samples per objective (objectives independent):
    // result[s] is a queries x objectives matrix.
    std::vector<Eigen::MatrixXd> sample_posterior(const std::vector<Embedding>& Xq, int n_samples,
                                                  Rng& rng) const;

    Eigen::MatrixXd cross_gram(const std::vector<Embedding>& Xq) const {
        return tanimoto_cross(Xq, X_);
    }

private:
    struct PerObjective {
        double y_mean = 0.0, y_sd = 1.0;
        Eigen::VectorXd y_std;
        GpHyperparams hp;
        Eigen::MatrixXd L;      // lower Cholesky factor of K
        Eigen::VectorXd alpha;  // K^-1 y_std
        double lml = 0.0;
        bool degenerate = false;
    };

    double lml_eig(const PerObjective& o, double sv, double nv) const;

    std::vector<Embedding> X_;
    Eigen::MatrixXd T_;        // training Tanimoto Gram
    Eigen::VectorXd eigvals_;  // of T_, for cheap marginal-likelihood evaluations
    Eigen::MatrixXd eigvecs_;
    std::vector<PerObjective> obj_;
};

}  // namespace boat
