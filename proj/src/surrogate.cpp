// SPDX-License-Identifier: Apache-2.0
#include "boat/surrogate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace boat {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kGolden = 0.6180339887498949;

Eigen::MatrixXd build_kernel(const Eigen::MatrixXd& T, const GpHyperparams& hp) {
    Eigen::MatrixXd K = hp.signal_variance * T;
    K.diagonal().array() += hp.noise_variance + hp.jitter;
    return K;
}

}  // namespace

Eigen::MatrixXd posterior_cholesky(const Eigen::MatrixXd& cov, double stabilizer) {
    for (double s = stabilizer; s <= 1e-2; s *= 10.0) {
        Eigen::MatrixXd K = cov;
        K.diagonal().array() += s;
        Eigen::LLT<Eigen::MatrixXd> llt(K);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    // rank-deficient or indefinite: clamp eigenvalues
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal();
}

double SurrogateModel::lml_eig(const PerObjective& o, double sv, double nv) const {
    const double n = static_cast<double>(o.y_std.size());
    double quad = 0.0, logdet = 0.0;
    static thread_local Eigen::VectorXd q;
    q.noalias() = eigvecs_.transpose() * o.y_std;
    for (Eigen::Index i = 0; i < eigvals_.size(); ++i) {
        const double e = sv * eigvals_[i] + nv + o.hp.jitter;
        if (e <= 0.0) return -std::numeric_limits<double>::infinity();
        quad += q[i] * q[i] / e;
        logdet += std::log(e);
    }
    return -0.5 * quad - 0.5 * logdet - 0.5 * n * kLog2Pi;
}

double SurrogateModel::log_marginal_likelihood(int objective, double signal_variance,
                                               double noise_variance) const {
    const auto& o = obj_.at(objective);
    if (o.degenerate) throw SingularKernel("degenerate objective has no marginal likelihood");
    const double v = lml_eig(o, signal_variance, noise_variance);
    if (!std::isfinite(v)) throw SingularKernel("kernel matrix not positive definite");
    return v;
}

SurrogateModel SurrogateModel::fit(std::vector<Embedding> X, const Eigen::MatrixXd& Y,
                                   const GpFitConfig& cfg) {
    const Eigen::Index n = static_cast<Eigen::Index>(X.size());
    if (n < 2) throw ConfigError("GP fit needs at least 2 training points");
    if (Y.rows() != n) throw DimensionMismatch("target rows do not match input count");

    SurrogateModel m;
    m.X_ = std::move(X);
    m.T_ = tanimoto_gram(m.X_);

    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.T_);
        if (es.info() != Eigen::Success)
            throw DecompositionFailure("eigendecomposition of the kernel Gram failed");
        m.eigvals_ = es.eigenvalues();
        m.eigvecs_ = es.eigenvectors();
    }

    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
        PerObjective o;
        o.hp = static_cast<std::size_t>(j) < cfg.per_objective_init.size()
                   ? cfg.per_objective_init[j]
                   : cfg.init;
        const Eigen::VectorXd y = Y.col(j);
        o.y_mean = y.mean();
        const Eigen::VectorXd centered = y.array() - o.y_mean;
        o.y_sd = std::sqrt(centered.squaredNorm() / static_cast<double>(n));
        if (o.y_sd < 1e-12) {
            // zero target variance: constant-mean predictor with unit prior variance
            o.degenerate = true;
            o.y_sd = 1.0;
            o.y_std = Eigen::VectorXd::Zero(n);
            o.lml = 0.0;
            m.obj_.push_back(std::move(o));
            continue;
        }
        o.y_std = centered / o.y_sd;

        if (cfg.optimize) {
            // log-space grid multi-start, then coordinate-wise golden-section
            // refinement, capped at cfg.max_evals likelihood evaluations
            int evals = 0;
            auto lml_at = [&](double lsv, double lnv) {
                ++evals;
                return m.lml_eig(o, std::exp(lsv), std::exp(lnv));
            };
            const double lsv_min = std::log(cfg.sv_min), lsv_max = std::log(cfg.sv_max);
            const double lnv_min = std::log(cfg.nv_min), lnv_max = std::log(cfg.nv_max);
            double best_lsv = std::log(o.hp.signal_variance);
            double best_lnv = std::log(std::max(o.hp.noise_variance, cfg.nv_min));
            double best = lml_at(best_lsv, best_lnv);
            for (int a = 0; a < cfg.grid; ++a)
                for (int b = 0; b < cfg.grid; ++b) {
                    const double lsv = lsv_min + (lsv_max - lsv_min) * a / (cfg.grid - 1);
                    const double lnv = lnv_min + (lnv_max - lnv_min) * b / (cfg.grid - 1);
                    const double v = lml_at(lsv, lnv);
                    if (v > best) { best = v; best_lsv = lsv; best_lnv = lnv; }
                }
            const double step_sv = (lsv_max - lsv_min) / (cfg.grid - 1);
            const double step_nv = (lnv_max - lnv_min) / (cfg.grid - 1);
            for (int coord = 0; evals < cfg.max_evals; coord ^= 1) {
                const bool on_sv = coord == 0;
                const double step = on_sv ? step_sv : step_nv;
                double lo = (on_sv ? best_lsv : best_lnv) - step;
                double hi = (on_sv ? best_lsv : best_lnv) + step;
                lo = std::max(lo, on_sv ? lsv_min : lnv_min);
                hi = std::min(hi, on_sv ? lsv_max : lnv_max);
                double x1 = hi - kGolden * (hi - lo);
                double x2 = lo + kGolden * (hi - lo);
                auto eval_coord = [&](double x) {
                    return on_sv ? lml_at(x, best_lnv) : lml_at(best_lsv, x);
                };
                double f1 = eval_coord(x1), f2 = eval_coord(x2);
                for (int it = 0; it < 6 && evals < cfg.max_evals; ++it) {
                    if (f1 < f2) {
                        lo = x1; x1 = x2; f1 = f2;
                        x2 = lo + kGolden * (hi - lo);
                        f2 = eval_coord(x2);
                    } else {
                        hi = x2; x2 = x1; f2 = f1;
                        x1 = hi - kGolden * (hi - lo);
                        f1 = eval_coord(x1);
                    }
                }
                const double xbest = f1 > f2 ? x1 : x2;
                const double fbest = std::max(f1, f2);
                if (fbest > best) {
                    best = fbest;
                    (on_sv ? best_lsv : best_lnv) = xbest;
                }
            }
            o.hp.signal_variance = std::exp(best_lsv);
            o.hp.noise_variance = std::exp(best_lnv);
        }

        // factorize, escalating jitter on failure (the Tanimoto Gram of
        // real-valued embeddings is not guaranteed PSD)
        bool ok = false;
        for (double jit = o.hp.jitter; jit <= 1e-2; jit *= 10.0) {
            o.hp.jitter = jit;
            Eigen::LLT<Eigen::MatrixXd> llt(build_kernel(m.T_, o.hp));
            if (llt.info() == Eigen::Success) {
                o.L = llt.matrixL();
                ok = true;
                break;
            }
        }
        if (!ok) throw SingularKernel("kernel factorization failed at maximum jitter");
        o.alpha = o.L.transpose().triangularView<Eigen::Upper>().solve(
            o.L.triangularView<Eigen::Lower>().solve(o.y_std));
        o.lml = m.lml_eig(o, o.hp.signal_variance, o.hp.noise_variance);
        m.obj_.push_back(std::move(o));
    }
    return m;
}

WhitenedPosterior SurrogateModel::whitened_posterior(int objective,
                                                     const Eigen::MatrixXd& Tq) const {
    const auto& o = obj_.at(objective);
    WhitenedPosterior wp;
    if (o.degenerate) {
        wp.degenerate = true;
        wp.mean = Eigen::VectorXd::Constant(Tq.rows(), o.y_mean);
        return wp;
    }
    wp.sv = o.hp.signal_variance;
    wp.scale = o.y_sd * o.y_sd;
    const Eigen::MatrixXd Kq = wp.sv * Tq;
    wp.mean = ((Kq * o.alpha * o.y_sd).array() + o.y_mean).matrix();
    wp.V = o.L.triangularView<Eigen::Lower>().solve(Kq.transpose());
    return wp;
}

Posterior SurrogateModel::posterior_from_gram(int objective, const Eigen::MatrixXd& Tq,
                                              const Eigen::MatrixXd& Tqq, bool full_cov) const {
    const auto& o = obj_.at(objective);
    const Eigen::Index mq = Tq.rows();
    Posterior post;
    post.full_cov = full_cov;
    if (o.degenerate) {
        post.mean = Eigen::VectorXd::Constant(mq, o.y_mean);
        post.var = Eigen::VectorXd::Ones(mq);
        if (full_cov) post.cov = Eigen::MatrixXd::Identity(mq, mq);
        return post;
    }
    const double sv = o.hp.signal_variance;
    const Eigen::MatrixXd Kq = sv * Tq;  // mq x n
    const Eigen::MatrixXd V = o.L.triangularView<Eigen::Lower>().solve(Kq.transpose());
    const double scale = o.y_sd * o.y_sd;
    post.mean = ((Kq * o.alpha * o.y_sd).array() + o.y_mean).matrix();
    if (full_cov) {
        post.cov = scale * (sv * Tqq - V.transpose() * V);
        post.cov = 0.5 * (post.cov + post.cov.transpose().eval());
        post.var = post.cov.diagonal().cwiseMax(0.0);
        post.cov.diagonal() = post.var;
    } else {
        const Eigen::ArrayXd raw =
            scale * (sv * Tqq.diagonal().array() -
                     V.colwise().squaredNorm().transpose().array());
        post.var = raw.max(0.0).matrix();
    }
    return post;
}

Posterior SurrogateModel::posterior(int objective, const std::vector<Embedding>& Xq,
                                    bool full_cov) const {
    const Eigen::MatrixXd Tq = tanimoto_cross(Xq, X_);
    const Eigen::MatrixXd Tqq = tanimoto_gram(Xq);
    return posterior_from_gram(objective, Tq, Tqq, full_cov);
}

std::vector<Eigen::MatrixXd> SurrogateModel::sample_posterior(const std::vector<Embedding>& Xq,
                                                              int n_samples, Rng& rng) const {
    const Eigen::Index mq = static_cast<Eigen::Index>(Xq.size());
    const int k = objectives();
    const Eigen::MatrixXd Tq = tanimoto_cross(Xq, X_);
    const Eigen::MatrixXd Tqq = tanimoto_gram(Xq);

    std::vector<Eigen::MatrixXd> samples(n_samples, Eigen::MatrixXd(mq, k));
    std::normal_distribution<double> normal;
    for (int j = 0; j < k; ++j) {
        const Posterior post = posterior_from_gram(j, Tq, Tqq, true);
        const Eigen::MatrixXd L = posterior_cholesky(post.cov);
        Eigen::VectorXd z(L.cols());
        for (int s = 0; s < n_samples; ++s) {
            for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
            samples[s].col(j) = post.mean + L * z;
        }
    }
    return samples;
}

}  // namespace boat
