// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "boat/common.hpp"
#include "boat/pareto.hpp"
#include "boat/surrogate.hpp"

namespace boat {

/// State shared by all acquisition evaluations within one BO iteration:
/// the current observed Pareto front (maximization convention), the
/// hypervolume reference point, and the Monte-Carlo sampling setup.
struct AcquisitionContext {
    std::vector<ScoreVector> front;
    ScoreVector ref;
    int mc_samples = 128;
    std::uint64_t seed = 0;
};

// Scaled complementary error function exp(x^2) erfc(x); accurate over the
// full double range (asymptotic series for large x).
double erfcx(double x);

// log EI = log sigma + log h(z), z = (mean - best)/sigma, h(z) = phi(z) + z Phi(z),
// evaluated stably for z far below zero. sigma = 0 degenerates to
// log(max(mean - best, 0)); -inf is a valid return for non-improving points.
double log_ei(double mean, double std, double best);

// Exact 2-objective EHVI for independent Gaussian marginals via the
// sorted-front strip decomposition.
double ehvi_2d(const Eigen::Vector2d& mean, const Eigen::Vector2d& std,
               const AcquisitionContext& ctx);

/// Monte-Carlo batch acquisition (qEHVI or qNEHVI) with base samples fixed
/// at construction so all evaluations within one BO iteration optimize a
/// deterministic surface. For qNEHVI the per-sample fronts over the observed
/// points are precomputed once.
class MonteCarloAcquisition {
public:
    static MonteCarloAcquisition qehvi(const SurrogateModel& model, AcquisitionContext ctx,
                                       int q);
    static MonteCarloAcquisition qnehvi(const SurrogateModel& model,
                                        const std::vector<Embedding>& observed,
                                        AcquisitionContext ctx, int q);

    double evaluate(const std::vector<Embedding>& batch) const;
    // One Tanimoto cross-Gram and whitening pass for a whole population of
    // batches; much cheaper than per-batch evaluation inside the GA.
    std::vector<double> evaluate_many(const std::vector<std::vector<Embedding>>& batches) const;

    int q() const { return q_; }

private:
    MonteCarloAcquisition() = default;

    const SurrogateModel* model_ = nullptr;
    AcquisitionContext ctx_;
    int q_ = 1;
    int k_ = 0;
    Eigen::MatrixXd Z_;  // mc_samples x (q*k) base normals, objective-major
    // per-MC-sample front and its hypervolume (size 1 when not noisy)
    std::vector<std::vector<ScoreVector>> sample_fronts_;
    std::vector<double> sample_hv_;
    bool noisy_ = false;
};

// Convenience single-shot forms of the batch acquisitions.
double qehvi_mc(const std::vector<Embedding>& batch, const SurrogateModel& model,
                const AcquisitionContext& ctx);
double qnehvi_mc(const std::vector<Embedding>& batch, const SurrogateModel& model,
                 const std::vector<Embedding>& observed, const AcquisitionContext& ctx);

}  // namespace boat
