// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "boat/acquisition.hpp"
#include "boat/encoding.hpp"
#include "boat/pareto.hpp"

using namespace boat;

namespace {

constexpr long double kPiL = 3.141592653589793238462643383279502884L;
constexpr long double kLog2PiL = 1.837877066409345483560659472811235279L;

// Independent oracle for log h(z), h(z) = phi(z) + z Phi(z):
// long-double direct evaluation for moderate z, Mills-ratio asymptotic
// series h(-t) = phi(t)/t^2 (1 - 3/t^2 + 15/t^4 - ...) far in the tail.
long double log_h_oracle(long double z) {
    if (z > -10.0L) {
        const long double phi = expl(-z * z / 2.0L) / sqrtl(2.0L * kPiL);
        const long double Phi = erfcl(-z / sqrtl(2.0L)) / 2.0L;
        return logl(phi + z * Phi);
    }
    const long double t = -z;
    long double sum = 1.0L, term = 1.0L;
    for (int n = 1; n < 30; ++n) {
        term *= -(2.0L * n + 1.0L) / (t * t);
        sum += term;
        if (fabsl(term) < 1e-24L) break;
    }
    return -t * t / 2.0L - 0.5L * kLog2PiL - 2.0L * logl(t) + logl(sum);
}

// Independent asymptotic oracle for erfcx at large argument.
long double erfcx_series_oracle(long double x) {
    long double sum = 1.0L, term = 1.0L;
    for (int n = 1; n < 20; ++n) {
        term *= -(2.0L * n - 1.0L) / (2.0L * x * x);
        sum += term;
        if (fabsl(term) < 1e-24L) break;
    }
    return sum / (x * sqrtl(kPiL));
}

ScoreVector sv2(double a, double b) {
    ScoreVector v(2);
    v << a, b;
    return v;
}

// Monte-Carlo EHVI oracle with standard-error estimate.
std::pair<double, double> mc_ehvi(const Eigen::Vector2d& mean, const Eigen::Vector2d& std,
                                  const std::vector<ScoreVector>& front,
                                  const ScoreVector& ref, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const double hv_front = hypervolume(front, ref);
    double sum = 0.0, sumsq = 0.0;
    std::vector<ScoreVector> pts = front;
    pts.push_back(ScoreVector(2));
    for (int i = 0; i < n; ++i) {
        pts.back() = sv2(mean[0] + std[0] * normal(rng), mean[1] + std[1] * normal(rng));
        const double imp = hypervolume(pts, ref) - hv_front;
        sum += imp;
        sumsq += imp * imp;
    }
    const double est = sum / n;
    const double var = std::max(0.0, sumsq / n - est * est);
    return {est, std::sqrt(var / n)};
}

SurrogateModel toy_model(std::mt19937_64& rng, int n = 10, std::size_t L = 6) {
    OneHotEncoder enc;
    std::set<std::string> seen;
    std::vector<Embedding> X;
    std::vector<Sequence> seqs;
    while (static_cast<int>(X.size()) < n) {
        std::string s;
        for (std::size_t i = 0; i < L; ++i) s.push_back(kAminoAcids[rng() % 6]);
        if (!seen.insert(s).second) continue;
        seqs.push_back(Sequence::validate(s, L));
        X.push_back(enc.encode(seqs.back()));
    }
    Eigen::MatrixXd Y(n, 2);
    std::normal_distribution<double> normal;
    for (int i = 0; i < n; ++i) {
        Y(i, 0) = normal(rng);
        Y(i, 1) = normal(rng);
    }
    return SurrogateModel::fit(X, Y);
}

}  // namespace

TEST_CASE("erfcx agrees with direct long-double evaluation at moderate x") {
    CHECK(erfcx(0.0) == doctest::Approx(1.0).epsilon(1e-14));
    for (double x = -3.0; x <= 5.0; x += 0.1) {
        const long double want = expl((long double)x * x) * erfcl(x);
        CHECK(erfcx(x) == doctest::Approx(static_cast<double>(want)).epsilon(1e-12));
    }
}

TEST_CASE("erfcx matches the asymptotic series far in the tail") {
    for (double x : {8.0, 10.0, 30.0, 100.0, 1e4, 1e8}) {
        const double want = static_cast<double>(erfcx_series_oracle(x));
        CHECK(erfcx(x) == doctest::Approx(want).epsilon(1e-13));
    }
    // reflection identity erfcx(-x) = 2 exp(x^2) - erfcx(x)
    for (double x : {0.5, 1.0, 3.0, 10.0}) {
        const long double want = 2.0L * expl((long double)x * x) - (long double)erfcx(x);
        CHECK(erfcx(-x) == doctest::Approx(static_cast<double>(want)).epsilon(1e-12));
    }
}

TEST_CASE("log_ei matches the independent oracle over z in [-40, 6]") {
    const double sigma = 1.0, best = 0.0;
    for (double z = -40.0; z <= 6.0; z += 0.25) {
        const double got = log_ei(z * sigma, sigma, best);
        const double want = static_cast<double>(log_h_oracle(z));
        CHECK(std::abs(got - want) <= 1e-6 * std::abs(want) + 1e-12);
    }
    // the two oracle branches agree where they meet
    CHECK(static_cast<double>(log_h_oracle(-10.0L)) ==
          doctest::Approx(static_cast<double>(log_h_oracle(-10.0000001L))).epsilon(1e-5));
}

TEST_CASE("log_ei closed-form anchors") {
    // z = 0: EI = sigma * phi(0), so log EI = log sigma - 0.5 log(2 pi)
    CHECK(log_ei(0.0, 1.0, 0.0) == doctest::Approx(-0.918938533204672742).epsilon(1e-12));
    CHECK(log_ei(3.0, 2.0, 3.0) ==
          doctest::Approx(std::log(2.0) - 0.918938533204672742).epsilon(1e-12));
    // scale equivariance: EI(mu, sigma, best) = sigma * h((mu-best)/sigma)
    for (double z : {-5.0, -1.0, 0.5, 3.0})
        CHECK(log_ei(10.0 + 0.25 * z, 0.25, 10.0) ==
              doctest::Approx(std::log(0.25) + log_ei(z, 1.0, 0.0)).epsilon(1e-10));
    // zero noise degenerates to the plain improvement
    CHECK(log_ei(5.0, 0.0, 3.0) == doctest::Approx(std::log(2.0)));
    CHECK(log_ei(3.0, 0.0, 5.0) == -std::numeric_limits<double>::infinity());
    CHECK(log_ei(5.0, 0.0, 5.0) == -std::numeric_limits<double>::infinity());
    // monotone in the mean
    double prev = -1e300;
    for (double mu = -5.0; mu <= 5.0; mu += 0.5) {
        const double v = log_ei(mu, 1.0, 0.0);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("ehvi_2d with near-zero variance equals the hypervolume improvement") {
    AcquisitionContext ctx;
    ctx.ref = sv2(0, 0);
    ctx.front = {sv2(1, 5), sv2(3, 3), sv2(5, 1)};
    const double hv_front = hypervolume(ctx.front, ctx.ref);
    const Eigen::Vector2d tiny(1e-9, 1e-9);
    for (auto [x, y] : std::vector<std::pair<double, double>>{
             {4, 4}, {6, 0.5}, {2, 2}, {0.5, 6}, {5.5, 5.5}, {-1, 8}}) {
        auto pts = ctx.front;
        pts.push_back(sv2(x, y));
        const double hvi = hypervolume(pts, ctx.ref) - hv_front;
        CHECK(std::abs(ehvi_2d(Eigen::Vector2d(x, y), tiny, ctx) - hvi) < 1e-6);
    }
    // dominated point: zero expected improvement
    CHECK(ehvi_2d(Eigen::Vector2d(2.0, 2.0), tiny, ctx) == doctest::Approx(0.0));
}

TEST_CASE("ehvi_2d with an empty front is a product of partial expectations") {
    AcquisitionContext ctx;
    ctx.ref = sv2(0, 0);
    const Eigen::Vector2d tiny(1e-9, 1e-9);
    CHECK(ehvi_2d(Eigen::Vector2d(2.0, 3.0), tiny, ctx) == doctest::Approx(6.0).epsilon(1e-6));
    // with unit variance the independent product still factorizes exactly
    auto [mc, se] = mc_ehvi(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(1.0, 1.0), {},
                            ctx.ref, 400000, 99);
    const double exact = ehvi_2d(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(1.0, 1.0), ctx);
    CHECK(std::abs(exact - mc) < 3.0 * se);
}

TEST_CASE("ehvi_2d matches Monte-Carlo estimates on random instances") {
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        AcquisitionContext ctx;
        ctx.ref = sv2(0, 0);
        const int f = 1 + static_cast<int>(rng() % 5);
        for (int i = 0; i < f; ++i)
            ctx.front.push_back(sv2(4.0 * unif(rng), 4.0 * unif(rng)));
        const Eigen::Vector2d mean(4.0 * unif(rng), 4.0 * unif(rng));
        const Eigen::Vector2d std(0.2 + unif(rng), 0.2 + unif(rng));
        const double exact = ehvi_2d(mean, std, ctx);
        auto [mc, se] = mc_ehvi(mean, std, ctx.front, ctx.ref, 400000, 1000 + trial);
        CHECK(std::abs(exact - mc) <= 3.0 * se + 1e-9);
        CHECK(exact >= 0.0);
    }
}

TEST_CASE("ehvi_2d ignores dominated and duplicated front members") {
    AcquisitionContext a, b;
    a.ref = b.ref = sv2(0, 0);
    a.front = {sv2(1, 5), sv2(3, 3)};
    b.front = {sv2(1, 5), sv2(3, 3), sv2(1, 3), sv2(3, 3), sv2(-2, 9)};
    const Eigen::Vector2d mean(2.5, 4.0), std(0.7, 0.4);
    CHECK(ehvi_2d(mean, std, a) == doctest::Approx(ehvi_2d(mean, std, b)).epsilon(1e-12));
}

TEST_CASE("ehvi_2d rejects non-2d contexts") {
    AcquisitionContext ctx;
    ctx.ref = ScoreVector::Zero(3);
    CHECK_THROWS_AS(ehvi_2d(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1), ctx),
                    WrongObjectiveCount);
}

TEST_CASE("qEHVI at q=1 agrees with the exact 2d EHVI") {
    std::mt19937_64 rng(404);
    const SurrogateModel model = toy_model(rng);
    AcquisitionContext ctx;
    ctx.ref = sv2(-3, -3);
    ctx.front = {sv2(-1, 1), sv2(0.5, 0.2), sv2(1, -1)};
    ctx.mc_samples = 200000;
    ctx.seed = 7;

    OneHotEncoder enc;
    const Embedding query = enc.encode(Sequence::validate("ACDACD", 6));
    const Posterior p0 = model.posterior(0, {query}, false);
    const Posterior p1 = model.posterior(1, {query}, false);
    const double exact = ehvi_2d(Eigen::Vector2d(p0.mean[0], p1.mean[0]),
                                 Eigen::Vector2d(std::sqrt(p0.var[0]), std::sqrt(p1.var[0])),
                                 ctx);
    const auto acq = MonteCarloAcquisition::qehvi(model, ctx, 1);
    const double mc = acq.evaluate({query});
    CHECK(mc == doctest::Approx(exact).epsilon(0.05));
}

TEST_CASE("MC acquisitions are deterministic given the context seed") {
    std::mt19937_64 rng(11);
    const SurrogateModel model = toy_model(rng);
    AcquisitionContext ctx;
    ctx.ref = sv2(-3, -3);
    ctx.front = {sv2(0, 0)};
    ctx.mc_samples = 256;
    ctx.seed = 42;
    OneHotEncoder enc;
    std::vector<Embedding> batch = {enc.encode(Sequence::validate("AAACCC", 6)),
                                    enc.encode(Sequence::validate("CCCDDD", 6))};
    const auto a1 = MonteCarloAcquisition::qehvi(model, ctx, 2);
    const auto a2 = MonteCarloAcquisition::qehvi(model, ctx, 2);
    CHECK(a1.evaluate(batch) == a2.evaluate(batch));
    ctx.seed = 43;
    const auto a3 = MonteCarloAcquisition::qehvi(model, ctx, 2);
    CHECK(a1.evaluate(batch) != a3.evaluate(batch));
}

TEST_CASE("evaluate_many matches per-batch evaluation") {
    std::mt19937_64 rng(77);
    const SurrogateModel model = toy_model(rng, 12);
    AcquisitionContext ctx;
    ctx.ref = sv2(-3, -3);
    ctx.front = {sv2(-1, 1), sv2(1, -1)};
    ctx.mc_samples = 128;
    ctx.seed = 5;
    OneHotEncoder enc;
    auto seq = [&](std::uint64_t s) {
        std::mt19937_64 r(s);
        std::string txt;
        for (int i = 0; i < 6; ++i) txt.push_back(kAminoAcids[r() % 6]);
        return enc.encode(Sequence::validate(txt, 6));
    };
    for (int q : {1, 2, 4}) {
        const auto acq = MonteCarloAcquisition::qehvi(model, ctx, q);
        std::vector<std::vector<Embedding>> batches;
        for (int b = 0; b < 9; ++b) {
            std::vector<Embedding> batch;
            for (int m = 0; m < q; ++m) batch.push_back(seq(100 * b + m));
            batches.push_back(std::move(batch));
        }
        const auto many = acq.evaluate_many(batches);
        REQUIRE(many.size() == batches.size());
        for (std::size_t b = 0; b < batches.size(); ++b)
            CHECK(many[b] == doctest::Approx(acq.evaluate(batches[b])).epsilon(1e-10));
    }
}

TEST_CASE("a duplicated member adds nothing to a qEHVI batch") {
    std::mt19937_64 rng(123);
    const SurrogateModel model = toy_model(rng);
    AcquisitionContext ctx;
    ctx.ref = sv2(-3, -3);
    ctx.front = {sv2(0, 0)};
    ctx.mc_samples = 100000;
    ctx.seed = 21;
    OneHotEncoder enc;
    const Embedding x = enc.encode(Sequence::validate("ACDEFA", 6));
    const auto q1 = MonteCarloAcquisition::qehvi(model, ctx, 1);
    const auto q2 = MonteCarloAcquisition::qehvi(model, ctx, 2);
    const double v1 = q1.evaluate({x});
    const double v2 = q2.evaluate({x, x});
    // the two members are perfectly correlated, so the joint improvement
    // collapses to the single-point improvement
    CHECK(v2 == doctest::Approx(v1).epsilon(0.05));
}

TEST_CASE("qNEHVI approaches qEHVI when the observed front is nearly noiseless") {
    std::mt19937_64 rng(31);
    OneHotEncoder enc;
    std::vector<Embedding> X;
    std::vector<std::string> texts = {"AAAAAA", "CCCCCC", "DDDDDD", "EEEEEE",
                                      "FFFFFF", "ACACAC", "CDCDCD", "DEDEDE"};
    for (const auto& t : texts) X.push_back(enc.encode(Sequence::validate(t, 6)));
    Eigen::MatrixXd Y(8, 2);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 8; ++i) {
        Y(i, 0) = normal(rng);
        Y(i, 1) = normal(rng);
    }
    GpFitConfig cfg;
    cfg.optimize = false;
    cfg.init.noise_variance = 1e-8;
    cfg.init.jitter = 1e-10;
    const SurrogateModel model = SurrogateModel::fit(X, Y, cfg);

    AcquisitionContext ctx;
    ctx.ref = sv2(-3, -3);
    std::vector<Embedding> observed;
    ParetoState state(ctx.ref);
    for (int i = 0; i < 8; ++i) state.update(i, Y.row(i).transpose());
    for (const auto& e : state.front()) {
        ctx.front.push_back(e.score);
        observed.push_back(X[static_cast<std::size_t>(e.id)]);
    }
    ctx.mc_samples = 50000;
    ctx.seed = 3;

    const Embedding query = enc.encode(Sequence::validate("ADADAD", 6));
    const double ehvi = MonteCarloAcquisition::qehvi(model, ctx, 1).evaluate({query});
    const double nehvi =
        MonteCarloAcquisition::qnehvi(model, observed, ctx, 1).evaluate({query});
    CHECK(nehvi == doctest::Approx(ehvi).epsilon(0.05));
    CHECK(qnehvi_mc({query}, model, observed, ctx) == doctest::Approx(nehvi).epsilon(1e-12));
    CHECK(qehvi_mc({query}, model, ctx) == doctest::Approx(ehvi).epsilon(1e-12));
}

TEST_CASE("MC acquisition values are non-negative") {
    std::mt19937_64 rng(8);
    const SurrogateModel model = toy_model(rng);
    AcquisitionContext ctx;
    ctx.ref = sv2(-3, -3);
    ctx.front = {sv2(2, 2)};  // far above anything the model predicts
    ctx.mc_samples = 512;
    ctx.seed = 9;
    OneHotEncoder enc;
    const auto acq = MonteCarloAcquisition::qehvi(model, ctx, 2);
    std::vector<Embedding> batch = {enc.encode(Sequence::validate("ACDEFA", 6)),
                                    enc.encode(Sequence::validate("FAFAFA", 6))};
    CHECK(acq.evaluate(batch) >= 0.0);
}
