#include <aml5g/defense.hpp>
#include <aml5g/harness.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

using namespace aml5g;

namespace {

Prediction pred(int label, double confidence, double margin = 0.0) { return {label, confidence, margin}; }

DefensePolicy auth(double pd) { return {pd, DefenseSelection::TopConfidence, DefenseScope::AuthDecisions, false}; }
DefensePolicy sensing(double pd) { return {pd, DefenseSelection::TopConfidence, DefenseScope::TransmitDecisions, false}; }

std::vector<Prediction> random_decisions(std::size_t n, RandomStream& rng) {
    std::vector<Prediction> d(n);
    for (auto& p : d) {
        p.label = rng.bernoulli(0.6) ? 1 : 0;
        // Coarse grid so that ties are common.
        p.confidence = 0.5 + 0.05 * static_cast<double>(rng.index(11));
        p.margin = std::log(p.confidence / (1.0 - p.confidence + 1e-300));
    }
    return d;
}

// Brute-force oracle: repeatedly take the best remaining flippable entry.
std::vector<std::size_t> oracle_flips(const std::vector<Prediction>& d, int target, double pd) {
    std::size_t n = 0;
    for (const auto& p : d) n += p.label == target;
    const auto k = static_cast<std::size_t>(std::ceil(pd * static_cast<double>(n) - 1e-12));
    std::vector<bool> taken(d.size(), false);
    std::vector<std::size_t> out;
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = d.size();
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (taken[i] || d[i].label != target) continue;
            if (best == d.size() || d[i].confidence > d[best].confidence ||
                (d[i].confidence == d[best].confidence && d[i].margin > d[best].margin))
                best = i;
        }
        taken[best] = true;
        out.push_back(best);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST(ApplyDefense, ZeroRateIsIdentity) {
    const std::vector<Prediction> d{pred(1, 0.9), pred(0, 0.8), pred(1, 0.7)};
    const auto out = apply_defense(d, auth(0.0));
    EXPECT_TRUE(out.flipped.empty());
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(out.decisions[i].label, d[i].label);
}

TEST(ApplyDefense, FullRateFlipsEveryIntended) {
    std::vector<Prediction> d;
    for (int i = 0; i < 7; ++i) d.push_back(pred(auth_intended_label, 0.6 + 0.05 * i));
    const auto out = apply_defense(d, auth(1.0));
    EXPECT_EQ(out.flipped.size(), d.size());
    for (const auto& p : out.decisions) EXPECT_EQ(p.label, auth_other_label);
}

TEST(ApplyDefense, TwoHighestOfElevenAtTwentyPercent) {
    std::vector<Prediction> d;
    for (int i = 0; i < 9; ++i) d.push_back(pred(1, 0.91 + 0.01 * i));
    d.push_back(pred(1, 0.6));
    std::rotate(d.begin(), d.begin() + 6, d.end());
    // N = 10, ceil(0.2 * 10) = 2.
    const auto out = apply_defense(d, auth(0.2));
    ASSERT_EQ(out.flipped.size(), 2u);
    std::vector<double> flipped_conf;
    for (std::size_t i : out.flipped) flipped_conf.push_back(d[i].confidence);
    std::sort(flipped_conf.begin(), flipped_conf.end());
    EXPECT_DOUBLE_EQ(flipped_conf[0], 0.98);
    EXPECT_DOUBLE_EQ(flipped_conf[1], 0.99);
}

TEST(ApplyDefense, TiesBrokenByMarginThenIndex) {
    const std::vector<Prediction> d{pred(1, 0.9, 1.0), pred(1, 0.9, 2.0), pred(1, 0.9, 2.0), pred(1, 0.9, 0.5)};
    const auto out = apply_defense(d, auth(0.5));
    EXPECT_EQ(out.flipped, (std::vector<std::size_t>{1, 2}));
    const auto one = apply_defense(d, auth(0.25));
    EXPECT_EQ(one.flipped, (std::vector<std::size_t>{1}));
}

TEST(ApplyDefense, NeverTouchesOtherClass) {
    const std::vector<Prediction> d{pred(0, 0.99), pred(0, 0.98), pred(1, 0.6)};
    const auto out = apply_defense(d, auth(1.0));
    EXPECT_EQ(out.flipped, (std::vector<std::size_t>{2}));
    EXPECT_EQ(out.decisions[0].label, 0);
    EXPECT_EQ(out.decisions[1].label, 0);
}

TEST(ApplyDefense, SensingScopeFlipsIdleToBusy) {
    const std::vector<Prediction> d{pred(ct_idle_label, 0.99), pred(ct_busy_label, 0.999), pred(ct_idle_label, 0.7)};
    const auto out = apply_defense(d, sensing(0.5));
    EXPECT_EQ(out.flipped, (std::vector<std::size_t>{0}));
    EXPECT_EQ(out.decisions[0].label, ct_busy_label);
    EXPECT_EQ(out.decisions[1].label, ct_busy_label);
    EXPECT_EQ(out_of_scope_flips(d, out.decisions, sensing(0.5)), 0u);
}

TEST(ApplyDefense, EmptyInput) {
    const std::vector<Prediction> d;
    EXPECT_TRUE(apply_defense(d, auth(0.3)).flipped.empty());
}

TEST(ApplyDefense, RejectsBadRateAndConfidence) {
    const std::vector<Prediction> d{pred(1, 0.9)};
    try {
        apply_defense(d, auth(1.5));
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "p_d");
    }
    EXPECT_THROW(apply_defense(d, auth(-0.1)), ValidationError);
    const std::vector<Prediction> bad{pred(1, 0.4)};
    EXPECT_THROW(apply_defense(bad, auth(0.1)), ValidationError);
}

TEST(ApplyDefenseProperty, MatchesOracleSizeAndScope) {
    RandomStream root(77);
    for (std::uint64_t trial = 0; trial < 300; ++trial) {
        RandomStream rng = root.child(trial);
        const auto d = random_decisions(1 + rng.index(200), rng);
        const double pd = rng.uniform();
        for (const auto& policy : {auth(pd), sensing(pd)}) {
            const auto out = apply_defense(d, policy);
            const auto want = oracle_flips(d, policy.flippable_label(), pd);
            ASSERT_EQ(out.flipped, want) << "trial " << trial;
            EXPECT_EQ(out_of_scope_flips(d, out.decisions, policy), 0u);
            std::size_t changed = 0;
            for (std::size_t i = 0; i < d.size(); ++i) changed += d[i].label != out.decisions[i].label;
            EXPECT_EQ(changed, out.flipped.size());
            // Bit-identical on repetition.
            EXPECT_EQ(apply_defense(d, policy).flipped, out.flipped);
        }
    }
}

TEST(ApplyDefenseProperty, FlipSetGrowsWithRate) {
    RandomStream rng(5);
    const auto d = random_decisions(500, rng);
    std::vector<std::size_t> prev;
    for (double pd : {0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0}) {
        const auto out = apply_defense(d, auth(pd));
        EXPECT_TRUE(std::includes(out.flipped.begin(), out.flipped.end(), prev.begin(), prev.end())) << pd;
        prev = out.flipped;
    }
}

TEST(OutOfScopeAudit, CountsForeignFlips) {
    const std::vector<Prediction> before{pred(0, 0.9), pred(1, 0.9), pred(0, 0.8)};
    std::vector<Prediction> after = before;
    after[0].label = 1;
    after[1].label = 0;
    EXPECT_EQ(out_of_scope_flips(before, after, auth(0.1)), 1u);
    after.pop_back();
    EXPECT_THROW(out_of_scope_flips(before, after, auth(0.1)), Error);
}

TEST(DefenseTable, CsvLayout) {
    const std::vector<Defense2Row> rows{{0.0, 0.9, 0, 0, 500}, {0.01, 0.682, 5, 0, 500}};
    std::ostringstream os;
    write_defense2_table(os, rows);
    EXPECT_EQ(os.str(), "p_d,attack_success_probability\n0,0.9\n0.01,0.682\n");
}

TEST(SensingDefense, PoisoningRaisesSurrogateErrorAtBoundedCost) {
    ExperimentConfig cfg;
    cfg.scenario = ScenarioId::Defense1;
    cfg.n_seeds = 10;
    cfg.pd_values = {0.0, 0.05};
    const auto r = run_experiment(cfg);
    double err0 = 0.0, err5 = 0.0;
    for (const auto& row : r.rows) {
        const double pd = row.keys.at(0);
        const double err = r.metric(row, "surrogate_no_ack_error");
        if (pd == 0.0) err0 += err / 10.0;
        if (pd == 0.05) err5 += err / 10.0;
        EXPECT_EQ(r.metric(row, "out_of_scope_flips"), 0.0);
        const double cost = r.metric(row, "defender_throughput_cost");
        if (pd == 0.0) {
            EXPECT_EQ(cost, 0.0) << "seed " << row.seed;
        } else {
            EXPECT_GE(cost, 0.8 * pd) << "seed " << row.seed << " p_d " << pd;
            EXPECT_LE(cost, 1.2 * pd) << "seed " << row.seed << " p_d " << pd;
        }
    }
    EXPECT_GT(err5, err0);
}
