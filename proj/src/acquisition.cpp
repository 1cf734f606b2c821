// SPDX-License-Identifier: Apache-2.0
#include "boat/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace boat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kHalfLog2Pi = 0.9189385332046728;
constexpr double kSqrtHalfPi = 1.2533141373155003;

double norm_pdf(double z) { return std::exp(-0.5 * z * z - kHalfLog2Pi); }
double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

// E[(X - t)+] for X ~ N(mean, std^2)
double expected_excess(double mean, double std, double t) {
    if (std <= 0.0) return std::max(mean - t, 0.0);
    const double u = (mean - t) / std;
    return (mean - t) * norm_cdf(u) + std * norm_pdf(u);
}

}  // namespace

double erfcx(double x) {
    if (x < 0.0) return 2.0 * std::exp(x * x) - erfcx(-x);
    if (x < 6.0) return std::exp(x * x) * std::erfc(x);
    // asymptotic series 1/(x sqrt(pi)) * sum (-1)^n (2n-1)!!/(2x^2)^n;
    // truncation error below the first omitted term, ~1e-16 for x >= 6
    const double inv2x2 = 1.0 / (2.0 * x * x);
    double term = 1.0, sum = 1.0;
    for (int n = 1; n < 40; ++n) {
        const double next = term * -(2.0 * n - 1.0) * inv2x2;
        if (std::abs(next) >= std::abs(term)) break;  // series started diverging
        term = next;
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum / (x * 1.772453850905516);  // sqrt(pi)
}

double log_ei(double mean, double std, double best) {
    if (std <= 0.0) {
        const double imp = mean - best;
        return imp > 0.0 ? std::log(imp) : -kInf;
    }
    const double z = (mean - best) / std;
    double log_h;
    if (z > -1.0) {
        log_h = std::log(norm_pdf(z) + z * norm_cdf(z));
    } else {
        // h(z) = phi(z) * (1 + z sqrt(pi/2) erfcx(-z/sqrt(2))); the bracket
        // decays like 1/z^2, so log1p keeps it accurate for z << 0
        const double bracket = z * kSqrtHalfPi * erfcx(-z / kSqrt2);
        log_h = -0.5 * z * z - kHalfLog2Pi + std::log1p(bracket);
    }
    return std::log(std) + log_h;
}

double ehvi_2d(const Eigen::Vector2d& mean, const Eigen::Vector2d& std,
               const AcquisitionContext& ctx) {
    if (ctx.ref.size() != 2)
        throw WrongObjectiveCount("ehvi_2d requires exactly 2 objectives");
    const double r1 = ctx.ref[0], r2 = ctx.ref[1];

    // staircase of front points clamped to the reference box: x strictly
    // descending, z strictly ascending
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : ctx.front) {
        if (p.size() != 2) throw WrongObjectiveCount("front point is not 2-dimensional");
        if (p[0] > r1 && p[1] > r2) pts.push_back({p[0], p[1]});
    }
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::pair<double, double>> stair;
    for (const auto& p : pts)
        if (stair.empty() || p.second > stair.back().second) stair.push_back(p);

    // EHVI = integral over u of P(y1 >= u) * E[(y2 - g(u))+] du, with g the
    // staircase level; strip weights are differences of E[(y1 - t)+]
    auto e1 = [&](double t) { return expected_excess(mean[0], std[0], t); };
    auto e2 = [&](double t) { return expected_excess(mean[1], std[1], t); };
    if (stair.empty()) return e1(r1) * e2(r2);

    double acq = e1(stair.front().first) * e2(r2);
    for (std::size_t i = 0; i + 1 < stair.size(); ++i)
        acq += (e1(stair[i + 1].first) - e1(stair[i].first)) * e2(stair[i].second);
    acq += (e1(r1) - e1(stair.back().first)) * e2(stair.back().second);
    return std::max(acq, 0.0);
}

MonteCarloAcquisition MonteCarloAcquisition::qehvi(const SurrogateModel& model,
                                                   AcquisitionContext ctx, int q) {
    if (q < 1) throw ConfigError("batch size must be >= 1");
    if (ctx.ref.size() != model.objectives())
        throw WrongObjectiveCount("reference dimension does not match objective count");
    MonteCarloAcquisition a;
    a.model_ = &model;
    a.q_ = q;
    a.k_ = model.objectives();
    a.noisy_ = false;
    a.sample_fronts_ = {ctx.front};
    a.sample_hv_ = {hypervolume(ctx.front, ctx.ref)};
    a.ctx_ = std::move(ctx);

    Rng rng(mix_seed(a.ctx_.seed, 0x51EAu));
    std::normal_distribution<double> normal;
    a.Z_.resize(a.ctx_.mc_samples, q * a.k_);
    for (Eigen::Index s = 0; s < a.Z_.rows(); ++s)
        for (Eigen::Index c = 0; c < a.Z_.cols(); ++c) a.Z_(s, c) = normal(rng);
    return a;
}

MonteCarloAcquisition MonteCarloAcquisition::qnehvi(const SurrogateModel& model,
                                                    const std::vector<Embedding>& observed,
                                                    AcquisitionContext ctx, int q) {
    MonteCarloAcquisition a = qehvi(model, std::move(ctx), q);
    a.noisy_ = true;
    const int mc = a.ctx_.mc_samples;
    const int k = a.k_;
    const auto n = static_cast<Eigen::Index>(observed.size());

    a.sample_fronts_.assign(mc, {});
    a.sample_hv_.assign(mc, 0.0);
    if (n == 0) return a;

    // joint posterior samples over the observed points, per objective
    Rng rng(mix_seed(a.ctx_.seed, 0x0B5Eu));
    std::normal_distribution<double> normal;
    std::vector<Eigen::MatrixXd> draws(k);  // each n x mc
    for (int j = 0; j < k; ++j) {
        const Posterior post = model.posterior(j, observed, true);
        const Eigen::MatrixXd L = posterior_cholesky(post.cov);
        Eigen::MatrixXd Z(L.cols(), mc);
        for (Eigen::Index c = 0; c < Z.cols(); ++c)
            for (Eigen::Index r = 0; r < Z.rows(); ++r) Z(r, c) = normal(rng);
        draws[j] = (L * Z).colwise() + post.mean;
    }
    for (int s = 0; s < mc; ++s) {
        std::vector<ScoreVector> pts(n, ScoreVector(k));
        for (Eigen::Index i = 0; i < n; ++i)
            for (int j = 0; j < k; ++j) pts[i][j] = draws[j](i, s);
        const auto fronts = non_dominated_sort(pts);
        std::vector<ScoreVector> front;
        for (int idx : fronts.front()) front.push_back(pts[idx]);
        a.sample_hv_[s] = hypervolume(front, a.ctx_.ref);
        a.sample_fronts_[s] = std::move(front);
    }
    return a;
}

std::vector<double> MonteCarloAcquisition::evaluate_many(
    const std::vector<std::vector<Embedding>>& batches) const {
    const auto B = static_cast<Eigen::Index>(batches.size());
    std::vector<Embedding> flat;
    flat.reserve(B * q_);
    for (const auto& b : batches) {
        if (static_cast<int>(b.size()) != q_)
            throw ConfigError("batch size does not match acquisition q");
        for (const auto& e : b) flat.push_back(e);
    }
    const Eigen::MatrixXd Tq = tanimoto_cross(flat, model_->train_inputs());
    std::vector<WhitenedPosterior> wp;
    wp.reserve(k_);
    for (int j = 0; j < k_; ++j) wp.push_back(model_->whitened_posterior(j, Tq));

    const int mc = ctx_.mc_samples;
    std::vector<double> result(B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const Eigen::Index base = b * q_;
        const Eigen::MatrixXd Tqq = tanimoto_gram(batches[b]);
        // per objective: sampled values for all MC draws in one gemm (q x mc)
        std::vector<Eigen::MatrixXd> Y(k_);
        for (int j = 0; j < k_; ++j) {
            Eigen::MatrixXd cov(q_, q_);
            for (int i1 = 0; i1 < q_; ++i1)
                for (int i2 = 0; i2 < q_; ++i2)
                    cov(i1, i2) = wp[j].cov(Tqq(i1, i2), base + i1, base + i2);
            const Eigen::MatrixXd L = posterior_cholesky(cov);
            const Eigen::MatrixXd Zj =
                Z_.block(0, j * q_, mc, q_).transpose();  // q x mc
            Y[j] = (L * Zj).colwise() + wp[j].mean.segment(base, q_);
        }
        double total = 0.0;
        std::vector<ScoreVector> combined;
        for (int s = 0; s < mc; ++s) {
            const auto& front = sample_fronts_[noisy_ ? s : 0];
            combined.assign(front.begin(), front.end());
            for (int i = 0; i < q_; ++i) {
                ScoreVector y(k_);
                for (int j = 0; j < k_; ++j) y[j] = Y[j](i, s);
                combined.push_back(std::move(y));
            }
            total += std::max(0.0, hypervolume(combined, ctx_.ref) -
                                       sample_hv_[noisy_ ? s : 0]);
        }
        result[b] = total / mc;
    }
    return result;
}

double MonteCarloAcquisition::evaluate(const std::vector<Embedding>& batch) const {
    return evaluate_many({batch}).front();
}

double qehvi_mc(const std::vector<Embedding>& batch, const SurrogateModel& model,
                const AcquisitionContext& ctx) {
    return MonteCarloAcquisition::qehvi(model, ctx, static_cast<int>(batch.size()))
        .evaluate(batch);
}

double qnehvi_mc(const std::vector<Embedding>& batch, const SurrogateModel& model,
                 const std::vector<Embedding>& observed, const AcquisitionContext& ctx) {
    return MonteCarloAcquisition::qnehvi(model, observed, ctx,
                                         static_cast<int>(batch.size()))
        .evaluate(batch);
}

}  // namespace boat
