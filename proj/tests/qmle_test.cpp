#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "miscrit/qmle.hpp"
#include "oracles.hpp"

using miscrit::Dataset;
using miscrit::Error;
using miscrit::ErrorCode;
using miscrit::Family;
using miscrit::fit_qmle;

namespace {

Dataset four_point(std::initializer_list<double> y) {
    Dataset d;
    d.y = Eigen::Map<const Eigen::VectorXd>(std::data(y), 4);
    d.x.resize(4, 2);
    d.x << 1, -1, 1, -0.5, 1, 0.5, 1, 1;
    return d;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::input;
}

Dataset random_linear(int n, int d, unsigned seed, double noise = 1.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    Dataset out;
    out.x.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) out.x(i, j) = j == 0 ? 1.0 : z(gen);
    Eigen::VectorXd beta = Eigen::VectorXd::LinSpaced(d, 1.0, -1.0);
    out.y = out.x * beta;
    for (int i = 0; i < n; ++i) out.y[i] += noise * z(gen);
    return out;
}

Dataset random_logistic(int n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u;
    Dataset out;
    out.x.resize(n, 3);
    out.y.resize(n);
    for (int i = 0; i < n; ++i) {
        out.x(i, 0) = 1.0;
        out.x(i, 1) = z(gen);
        out.x(i, 2) = z(gen);
        const double t = 0.3 + 0.8 * out.x(i, 1) - 0.5 * out.x(i, 2);
        out.y[i] = u(gen) < 1.0 / (1.0 + std::exp(-t)) ? 1.0 : 0.0;
    }
    return out;
}

Dataset random_poisson(int n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    Dataset out;
    out.x.resize(n, 2);
    out.y.resize(n);
    for (int i = 0; i < n; ++i) {
        out.x(i, 0) = 1.0;
        out.x(i, 1) = 0.5 * z(gen);
        std::poisson_distribution<int> pois(std::exp(0.5 + 0.7 * out.x(i, 1)));
        out.y[i] = pois(gen);
    }
    return out;
}

}  // namespace

TEST(QuasiLogLikelihood, AtZero) {
    const Dataset d = four_point({0, 1, 1, 0});
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    EXPECT_DOUBLE_EQ(miscrit::quasi_log_likelihood(d, Family::logistic(), zero), -4.0 * std::log(2.0));
    EXPECT_DOUBLE_EQ(miscrit::quasi_log_likelihood(d, Family::poisson(), zero), -4.0);
}

TEST(QuasiLogLikelihood, LogisticTwoPoint) {
    Dataset d;
    d.y = Eigen::Vector2d(1, 0);
    d.x = Eigen::MatrixXd::Ones(2, 1);
    // mpmath: 0.5 - 2 log(1 + e^0.5)
    EXPECT_NEAR(miscrit::quasi_log_likelihood(d, Family::logistic(), Eigen::VectorXd::Constant(1, 0.5)),
                -1.4481539683602134, 1e-14);
}

TEST(FitQmle, ExactLinearFitIsDegenerate) {
    Dataset d;
    d.y = Eigen::Vector3d(1, 2, 3);
    d.x = Eigen::MatrixXd(3, 1);
    d.x << 1, 2, 3;
    EXPECT_EQ(code_of([&] { fit_qmle(d, Family::linear_estimated()); }), ErrorCode::dispersion_degenerate);
}

TEST(FitQmle, FixedDispersionIdentityDesign) {
    Dataset d;
    d.y = Eigen::Vector2d(2, 4);
    d.x = Eigen::MatrixXd::Identity(2, 2);
    const auto fit = fit_qmle(d, Family::linear(1.0));
    EXPECT_NEAR(fit.beta_hat[0], 2.0, 1e-14);
    EXPECT_NEAR(fit.beta_hat[1], 4.0, 1e-14);
    EXPECT_TRUE(fit.converged);
}

TEST(FitQmle, RankDeficientDesign) {
    Dataset d = random_linear(20, 3, 1);
    d.x.col(2) = 2.0 * d.x.col(1);
    EXPECT_EQ(code_of([&] { fit_qmle(d, Family::linear_estimated()); }), ErrorCode::design_rank);
    d.y = (d.y.array() > 0.0).cast<double>();
    EXPECT_EQ(code_of([&] { fit_qmle(d, Family::logistic()); }), ErrorCode::design_rank);
}

TEST(FitQmle, DispersionNeedsMoreRowsThanColumns) {
    Dataset d = random_linear(3, 3, 2);
    EXPECT_EQ(code_of([&] { fit_qmle(d, Family::linear_estimated()); }), ErrorCode::dispersion_undefined);
    EXPECT_NO_THROW(fit_qmle(d, Family::linear(1.0)));
}

TEST(FitQmle, ValidatesResponseSupport) {
    Dataset d = four_point({0, 1, 2, 0});
    EXPECT_EQ(code_of([&] { fit_qmle(d, Family::logistic()); }), ErrorCode::invalid_argument);
    d.y[2] = -1.0;
    EXPECT_EQ(code_of([&] { fit_qmle(d, Family::poisson()); }), ErrorCode::invalid_argument);
    d.y[2] = 0.5;
    EXPECT_EQ(code_of([&] { fit_qmle(d, Family::poisson()); }), ErrorCode::invalid_argument);
}

// Completely separated: the MLE does not exist and the fit must say so.
TEST(FitQmle, SeparatedLogisticIsFlagged) {
    const auto fit = fit_qmle(four_point({0, 0, 1, 1}), Family::logistic());
    EXPECT_TRUE(fit.separation);
    EXPECT_FALSE(fit.converged);
}

// Overlapping classes: a finite maximizer exists inside [-10, 10]^2.
TEST(FitQmle, LogisticMatchesGridOracle) {
    for (auto y : {std::vector<double>{1, 0, 1, 1}, std::vector<double>{0, 1, 0, 1}}) {
        Dataset d = four_point({y[0], y[1], y[2], y[3]});
        const auto fit = fit_qmle(d, Family::logistic());
        ASSERT_TRUE(fit.converged);
        const auto [b1, b2] = oracle::grid_golden_max_2d(
            [&](double u, double v) { return oracle::logistic_loglik(d.y, d.x, Eigen::Vector2d(u, v)); });
        EXPECT_NEAR(fit.beta_hat[0], b1, 1e-5);
        EXPECT_NEAR(fit.beta_hat[1], b2, 1e-5);
    }
}

TEST(FitQmleProperty, ConvergedScoreIsSmall) {
    for (unsigned seed = 1; seed <= 20; ++seed) {
        const Dataset lin = random_linear(200, 4, seed);
        const Dataset logi = random_logistic(300, seed);
        const Dataset pois = random_poisson(300, seed);
        for (auto [data, family] : {std::pair{&lin, Family::linear_estimated()}, std::pair{&logi, Family::logistic()},
                                    std::pair{&pois, Family::poisson()}}) {
            const auto fit = fit_qmle(*data, family);
            ASSERT_TRUE(fit.converged) << to_string(family.kind()) << " seed " << seed;
            const double s = miscrit::score(*data, family.estimates_dispersion() ? Family::linear(fit.dispersion) : family,
                                            fit.beta_hat)
                                 .cwiseAbs()
                                 .maxCoeff();
            EXPECT_LE(s, 1e-8) << to_string(family.kind()) << " seed " << seed;
            EXPECT_LE(fit.score_norm, 1e-8);
        }
    }
}

TEST(FitQmleProperty, LinearMatchesClosedForm) {
    for (unsigned seed = 1; seed <= 20; ++seed) {
        const Dataset d = random_linear(150, 5, seed);
        for (double s2 : {0.25, 1.0, 4.0}) {
            const auto fit = fit_qmle(d, Family::linear(s2));
            const Eigen::VectorXd ls = (d.x.transpose() * d.x).ldlt().solve(d.x.transpose() * d.y) / s2;
            EXPECT_LE((fit.beta_hat - ls).cwiseAbs().maxCoeff(), 1e-10 * ls.cwiseAbs().maxCoeff());
        }
        const auto est = fit_qmle(d, Family::linear_estimated());
        const double rss = oracle::rss_normal_equations(d.y, d.x);
        EXPECT_NEAR(est.dispersion, rss / (150 - 5), 1e-12 * rss);
        const double n = 150;
        EXPECT_NEAR(est.loglik,
                    -0.5 * (n - 5) - 0.5 * n * std::log(est.dispersion) - 0.5 * n * std::log(2.0 * M_PI), 1e-9);
    }
}

TEST(FitQmleProperty, NewtonIsMonotone) {
    for (unsigned seed = 1; seed <= 30; ++seed) {
        for (bool logistic : {true, false}) {
            const Dataset d = logistic ? random_logistic(100, seed) : random_poisson(100, seed);
            const auto fit = fit_qmle(d, logistic ? Family::logistic() : Family::poisson());
            for (std::size_t k = 1; k < fit.loglik_path.size(); ++k)
                EXPECT_GE(fit.loglik_path[k], fit.loglik_path[k - 1] - 1e-12 * std::abs(fit.loglik_path[k - 1]));
        }
    }
}

TEST(FitQmleProperty, RefitFromOptimumTakesAtMostOneStep) {
    for (unsigned seed = 1; seed <= 10; ++seed) {
        for (bool logistic : {true, false}) {
            const Dataset d = logistic ? random_logistic(200, seed) : random_poisson(200, seed);
            const Family f = logistic ? Family::logistic() : Family::poisson();
            const auto fit = fit_qmle(d, f);
            miscrit::FitOptions opts;
            opts.initial_beta = fit.beta_hat;
            const auto refit = fit_qmle(d, f, opts);
            EXPECT_TRUE(refit.converged);
            EXPECT_LE(refit.iterations, 1);
        }
    }
}

TEST(FitQmleProperty, RowPermutationInvariance) {
    std::mt19937 gen(11);
    for (unsigned seed = 1; seed <= 10; ++seed) {
        for (int which = 0; which < 3; ++which) {
            const Dataset d = which == 0 ? random_linear(80, 3, seed) : which == 1 ? random_logistic(80, seed)
                                                                                     : random_poisson(80, seed);
            const Family f = which == 0 ? Family::linear_estimated() : which == 1 ? Family::logistic() : Family::poisson();
            std::vector<int> perm(80);
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), gen);
            Dataset p;
            p.y.resize(80);
            p.x.resize(80, d.d());
            for (int i = 0; i < 80; ++i) {
                p.y[i] = d.y[perm[i]];
                p.x.row(i) = d.x.row(perm[i]);
            }
            const auto a = fit_qmle(d, f), b = fit_qmle(p, f);
            EXPECT_LE((a.beta_hat - b.beta_hat).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + a.beta_hat.cwiseAbs().maxCoeff()));
        }
    }
}

TEST(FitQmle, NonConvergenceIsReportedNotThrown) {
    miscrit::FitOptions opts;
    opts.max_iter = 1;
    const auto fit = fit_qmle(random_logistic(200, 5), Family::logistic(), opts);
    EXPECT_FALSE(fit.converged);
    EXPECT_EQ(fit.iterations, 1);
}
