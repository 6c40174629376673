#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "miscrit/criteria.hpp"

using miscrit::Criterion;
using miscrit::Error;
using miscrit::ErrorCode;
using miscrit::SandwichPair;

namespace {

SandwichPair summary(double trace, double logdet, bool ok = true) {
    SandwichPair sw;
    sw.trace_H = trace;
    sw.logdet_H = ok ? logdet : -std::numeric_limits<double>::infinity();
    sw.B_rank_ok = ok;
    return sw;
}

struct Tuple {
    double loglik;
    SandwichPair sw;
    long dim;
    long n;
};

// Random (loglik, H, dim, n) with H built from two random SPD matrices.
std::vector<Tuple> random_tuples(int count, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> dim_dist(1, 8);
    std::uniform_int_distribution<long> n_dist(2, 100000);
    std::uniform_real_distribution<double> ll_dist(-1e4, 10.0);
    std::vector<Tuple> out;
    for (int k = 0; k < count; ++k) {
        const int d = dim_dist(gen);
        Eigen::MatrixXd ga(d, d + 3), gb(d, d + 3);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d + 3; ++j) {
                ga(i, j) = z(gen);
                gb(i, j) = z(gen);
            }
        out.push_back({ll_dist(gen), miscrit::contrast(ga * ga.transpose(), gb * gb.transpose()), d, n_dist(gen)});
    }
    return out;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST(Aic, Examples) {
    EXPECT_EQ(miscrit::aic(-100.0, 3), 206.0);
    EXPECT_EQ(miscrit::aic(0.0, 1), 2.0);
    // chained from the two-point logistic quasi-log-likelihood
    EXPECT_NEAR(miscrit::aic(-1.4481539683602134, 1), 4.8963079367204267, 1e-14);
}

TEST(Bic, Examples) {
    // sample sizes are integers, so the log n = 2 case is checked at n = 7 against 2 log n shifts
    EXPECT_NEAR(miscrit::bic(-100.0, 3, 7) - miscrit::bic(-100.0, 1, 7), 2.0 * std::log(7.0), 1e-12);
    EXPECT_NEAR(miscrit::bic(-100.0, 3, 50), 211.73606901628444, 1e-12);
    try {
        miscrit::bic(0.0, 0, 50);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    }
}

TEST(Gaic, Examples) {
    EXPECT_EQ(miscrit::gaic(-100.0, summary(3.5, 0.0)), 207.0);
    for (long d = 1; d <= 6; ++d) EXPECT_EQ(miscrit::gaic(-42.5, summary(static_cast<double>(d), 0.0)), miscrit::aic(-42.5, d));
}

TEST(Gbic, Examples) {
    EXPECT_NEAR(miscrit::gbic(-100.0, summary(3.0, 0.0), 3, 50), 211.73606901628444, 1e-12);
    EXPECT_EQ(miscrit::gbic(-100.0, summary(3.0, 0.0), 3, 50), miscrit::bic(-100.0, 3, 50));
    EXPECT_EQ(miscrit::gbic(-100.0, summary(3.0, 0.0, false), 3, 50), std::numeric_limits<double>::infinity());
}

TEST(Sic, Examples) {
    const auto sw = summary(3.5, 0.2);
    EXPECT_EQ(miscrit::sic(-100.0, sw, 3, 50, 0.0), miscrit::gaic(-100.0, sw));
    EXPECT_EQ(miscrit::sic(-100.0, sw, 3, 50, 1.0), miscrit::gbic(-100.0, sw, 3, 50));
    // 100 + 1.5 log 50 - 0.1 + 1.75: gamma** = max(2 - 1.5, 0.5) = 0.5 weights trace 3.5
    EXPECT_NEAR(miscrit::sic(-100.0, sw, 3, 50, 0.5), 107.51803450814222, 1e-12);
}

TEST(Sic, DomainErrors) {
    for (double g : {-0.01, 1.01, std::nan("")}) {
        try {
            miscrit::sic(-1.0, summary(1.0, 0.0), 1, 10, g);
            FAIL() << "expected an error";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::domain);
        }
    }
}

TEST(Sic, SingularBOnlyAffectsPositiveGamma) {
    const auto sw = summary(2.0, 0.0, false);
    EXPECT_EQ(miscrit::sic(-10.0, sw, 2, 30, 0.0), miscrit::gaic(-10.0, sw));
    EXPECT_EQ(miscrit::sic(-10.0, sw, 2, 30, 0.25), std::numeric_limits<double>::infinity());
}

TEST(SicDecomposition, Examples) {
    EXPECT_EQ(miscrit::sic_half_decomposition(-7.0, summary(4.0, 0.0), 4, 20).misspec_kl, 0.0);
    const auto dec = miscrit::sic_half_decomposition(-100.0, summary(3.5, 0.2), 3, 50);
    EXPECT_NEAR(dec.misspec_kl, 0.15, 1e-15);
    EXPECT_NEAR(dec.total(), 107.51803450814222, 1e-12);
    try {
        miscrit::sic_half_decomposition(-1.0, summary(1.0, 0.0, false), 1, 10);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::decomposition_undefined);
    }
}

TEST(CriteriaProperty, EndpointIdentities) {
    for (const auto& t : random_tuples(1000, 1)) {
        EXPECT_LE(rel_err(miscrit::sic(t.loglik, t.sw, t.dim, t.n, 0.0), miscrit::gaic(t.loglik, t.sw)), 1e-12);
        EXPECT_LE(rel_err(miscrit::sic(t.loglik, t.sw, t.dim, t.n, 1.0), miscrit::gbic(t.loglik, t.sw, t.dim, t.n)),
                  1e-12);
    }
}

TEST(CriteriaProperty, DecompositionIdentity) {
    for (const auto& t : random_tuples(1000, 2)) {
        const auto dec = miscrit::sic_half_decomposition(t.loglik, t.sw, t.dim, t.n);
        // the decomposition lives on the -loglik scale; SIC at 1/2 has gamma* = 1/2
        EXPECT_LE(rel_err(dec.total(), miscrit::sic(t.loglik, t.sw, t.dim, t.n, 0.5)), 1e-12);
        EXPECT_GE(dec.misspec_kl, -1e-10);
    }
}

TEST(CriteriaProperty, PenaltyNondecreasingInDimension) {
    for (long n : {3L, 10L, 1000L})
        for (double g : miscrit::default_gamma_grid()) {
            double prev = -std::numeric_limits<double>::infinity();
            for (long d = 1; d <= 12; ++d) {
                const double v = miscrit::sic(-50.0, summary(static_cast<double>(d), 0.0), d, n, g);
                EXPECT_GE(v, prev) << "n=" << n << " gamma=" << g << " d=" << d;
                prev = v;
            }
        }
}

TEST(CriteriaProperty, ConstantShiftKeepsArgmin) {
    const auto tuples = random_tuples(40, 3);
    for (double g : miscrit::default_gamma_grid()) {
        for (double c : {-1234.5, 0.75, 1e4}) {
            std::size_t best = 0, best_shifted = 0;
            double lo = std::numeric_limits<double>::infinity(), lo_shifted = lo;
            for (std::size_t i = 0; i < tuples.size(); ++i) {
                const auto& t = tuples[i];
                const double v = miscrit::sic(t.loglik, t.sw, t.dim, 5000, g);
                const double w = miscrit::sic(t.loglik + c, t.sw, t.dim, 5000, g);
                EXPECT_LE(std::abs(w - (v - 2.0 * miscrit::gamma_star(g) * c)), 1e-9 * std::max(1.0, std::abs(v)));
                if (v < lo) lo = v, best = i;
                if (w < lo_shifted) lo_shifted = w, best_shifted = i;
            }
            EXPECT_EQ(best, best_shifted);
        }
    }
}

TEST(Criterion, NamesAndParsing) {
    EXPECT_EQ(Criterion::sic().name(), "SIC");
    EXPECT_EQ(Criterion::sic(0.25).name(), "SIC_0.25");
    EXPECT_EQ(miscrit::parse_criterion("gbic").kind, miscrit::CriterionKind::gbic);
    const auto c = miscrit::parse_criterion("SIC_0.75");
    EXPECT_EQ(c.kind, miscrit::CriterionKind::sic);
    EXPECT_EQ(c.gamma, 0.75);
    EXPECT_EQ(miscrit::parse_criterion("sic@0").gamma, 0.0);
    EXPECT_THROW(miscrit::parse_criterion("HQIC"), Error);
    EXPECT_THROW(miscrit::parse_criterion("SIC_2"), Error);
}

TEST(ScoreModel, IncludesHalfAndDecomposition) {
    const auto rep = miscrit::score_model(-100.0, summary(3.5, 0.2), 3, 50, {0.0, 1.0});
    EXPECT_EQ(rep.sic.size(), 3u);
    EXPECT_EQ(rep.score(Criterion::sic(0.0)), rep.gaic);
    EXPECT_EQ(rep.score(Criterion::sic(1.0)), rep.gbic);
    ASSERT_TRUE(rep.decomposition_half.has_value());
    EXPECT_THROW(rep.score(Criterion::sic(0.3)), Error);
}
