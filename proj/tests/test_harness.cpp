#include <aml5g/harness.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace aml5g;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

// `experiment` lines go into the [experiment] section, `extra` is appended as-is.
std::string tiny(const std::string& scenario, const std::string& extra = "", const std::string& experiment = "") {
    return "[experiment]\nscenario = " + scenario + "\n" + experiment +
           "n_slots = 60\nn_observations = 240\nn_defender_samples = 40\nn_trials = 50\n"
           "[train]\nbatch_size = 20\nn_steps = 15\n"
           "[gan]\ngan_batch_size = 20\ngan_n_steps = 10\n"
           "[scenario2]\nn_samples = 60\ngamma_values = 3\ngamma_db = 3\n" +
           extra;
}

MetricsReport synthetic(const std::string& scenario, const std::vector<double>& keys, int n_seeds, std::uint64_t salt) {
    MetricsReport r;
    r.scenario = scenario;
    detail::set_columns(r, parse_scenario(scenario));
    RandomStream rng(salt);
    for (int s = 0; s < n_seeds; ++s)
        for (double k : keys) {
            MetricsReport::Row row;
            row.seed = static_cast<std::uint64_t>(s + 1);
            if (!r.key_columns.empty()) row.keys = {k};
            for (std::size_t j = 0; j < r.metric_columns.size(); ++j) row.metrics.push_back(rng.normal() * 1e3 + rng.uniform());
            r.rows.push_back(row);
        }
    r.provenance.config_echo = echo_config(ExperimentConfig{});
    r.provenance.config_hash = config_hash(r.provenance.config_echo);
    return r;
}

}  // namespace

TEST(ParseConfig, EmptyDocumentGivesDefaults) {
    const auto cfg = parse_config("");
    EXPECT_EQ(cfg.scenario, ScenarioId::Baseline1);
    EXPECT_EQ(echo_config(cfg), echo_config(ExperimentConfig{}));
}

TEST(ParseConfig, OutOfRangeDefenseRateNamesField) {
    try {
        parse_config("p_d = 1.5\n");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "p_d");
    }
    try {
        parse_config("[defense]\npd_values = 0, 2\n");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "pd_values");
    }
}

TEST(ParseConfig, EchoHoldsSetValuesPlusDefaults) {
    const auto cfg = parse_config("[scenario2]\ngamma_db = 3\n[experiment]\nn_trials = 500\n");
    ExperimentConfig want;
    want.auth.gamma_db = 3.0;
    want.n_trials = 500;
    const auto echo = echo_config(cfg);
    EXPECT_EQ(echo, echo_config(want));
    EXPECT_NE(echo.find("gamma_db = 3\n"), std::string::npos);
    EXPECT_NE(echo.find("n_trials = 500\n"), std::string::npos);
    EXPECT_EQ(echo_config(parse_config(echo)), echo);
}

TEST(ParseConfig, EveryKeyRoundTrips) {
    const std::string doc =
        "[experiment]\nscenario = Defense2\nseed = 42\nn_seeds = 3\n"
        "[train]\noptimizer = sgd\nlearning_rate = 0.01\n"
        "[scenario1]\noccupancy = markov\np_idle_to_busy = 0.2\nsuccess_rule = bit_errors\n"
        "[scenario2]\ngamma_values = -3, inf\ndelay_spread_s = 1e-7\n"
        "[defense]\nall_time = true\npd_values = 0,0.5\n"
        "[ofdm]\nbits_per_symbol = 4\n";
    const auto cfg = parse_config(doc);
    EXPECT_EQ(cfg.scenario, ScenarioId::Defense2);
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_EQ(cfg.train.optimizer, OptimizerKind::Sgd);
    EXPECT_EQ(cfg.world1.occupancy.kind, OccupancyKind::Markov);
    EXPECT_TRUE(std::isinf(cfg.gamma_values[1]));
    EXPECT_TRUE(cfg.defense_all_time);
    EXPECT_EQ(cfg.world2.ofdm.bits_per_symbol, 4);
    const auto echo = echo_config(cfg);
    EXPECT_EQ(echo_config(parse_config(echo)), echo);
}

TEST(ParseConfig, SyntaxErrorReportsLine) {
    try {
        parse_config("seed = 1\n[experiment\nn_seeds = 2\n");
        FAIL();
    } catch (const ValidationError&) {
        FAIL() << "expected a parse error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::parse_error);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
}

TEST(ParseConfig, RejectsUnknownAndMisplacedKeys) {
    auto field_of = [](const std::string& doc) {
        try {
            parse_config(doc);
        } catch (const ValidationError& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    EXPECT_EQ(field_of("gamma = 3\n"), "gamma");
    EXPECT_EQ(field_of("[train]\ngamma_db = 3\n"), "gamma_db");
    EXPECT_EQ(field_of("[nowhere]\nseed = 3\n"), "nowhere");
    EXPECT_EQ(field_of("seed = abc\n"), "seed");
    EXPECT_EQ(field_of("seed = -1\n"), "seed");
    EXPECT_EQ(field_of("scenario = Spoof3\n"), "scenario");
    EXPECT_EQ(field_of("n_samples = 7\n"), "n_samples");
    EXPECT_EQ(field_of("[scenario2]\ngamma_values = nan\n"), "gamma_values");
}

TEST(Provenance, HashMatchesRehashOfEcho) {
    const auto cfg = parse_config(tiny("Baseline1"));
    const auto r = run_experiment(cfg);
    EXPECT_EQ(r.provenance.config_hash, config_hash(r.provenance.config_echo));
    EXPECT_EQ(r.provenance.config_hash, config_hash(echo_config(parse_config(r.provenance.config_echo))));
    EXPECT_EQ(r.provenance.version, artifact_version);
    EXPECT_EQ(r.provenance.config_hash.size(), 16u);
    EXPECT_NE(config_hash(echo_config(parse_config(tiny("Baseline1", "[defense]\np_d = 0.1\n")))), r.provenance.config_hash);
}

TEST(RunExperiment, RepeatedRunsAreByteIdentical) {
    const auto cfg = parse_config(tiny("Baseline1", "", "n_seeds = 2\n"));
    EXPECT_EQ(emit_report(run_experiment(cfg), ReportFormat::Csv), emit_report(run_experiment(cfg), ReportFormat::Csv));
}

TEST(RunExperiment, SeedRowsIndependentOfBatchComposition) {
    auto one = parse_config(tiny("Auth2", "", "seed = 5\n"));
    auto two = one;
    two.n_seeds = 2;
    auto shifted = one;
    shifted.seed = 4;
    shifted.n_seeds = 2;
    const auto r1 = run_experiment(one);
    const auto r2 = run_experiment(two, 2);
    const auto r3 = run_experiment(shifted);
    ASSERT_EQ(r1.rows.size(), 1u);
    ASSERT_EQ(r2.rows.size(), 2u);
    EXPECT_EQ(r1.rows[0].seed, 5u);
    EXPECT_EQ(r2.rows[0].metrics, r1.rows[0].metrics);
    EXPECT_EQ(r3.rows[1].seed, 5u);
    EXPECT_EQ(r3.rows[1].metrics, r1.rows[0].metrics);
}

TEST(RunExperiment, ThreadCountDoesNotChangeOutput) {
    const auto cfg = parse_config(tiny("Baseline1", "", "n_seeds = 3\n"));
    EXPECT_EQ(emit_report(run_experiment(cfg, 1), ReportFormat::Csv), emit_report(run_experiment(cfg, 3), ReportFormat::Csv));
}

TEST(RunExperiment, EveryScenarioProducesItsColumns) {
    for (const char* s : {"Baseline1", "Attack1", "Defense1", "Auth2", "Spoof2", "Defense2"}) {
        const auto r = run_experiment(parse_config(tiny(s, "[defense]\npd_values = 0, 0.05\n")));
        ASSERT_FALSE(r.rows.empty()) << s;
        for (const auto& row : r.rows) {
            EXPECT_EQ(row.metrics.size(), r.metric_columns.size()) << s;
            EXPECT_EQ(row.keys.size(), r.key_columns.size()) << s;
            for (std::size_t j = 0; j < r.metric_columns.size(); ++j)
                if (r.metric_columns[j] == "out_of_scope_flips") EXPECT_EQ(row.metrics[j], 0.0) << s;
        }
    }
}

TEST(RunExperiment, UndefendedRowMatchesSpoofingRun) {
    const auto spoof = run_experiment(parse_config(tiny("Spoof2")));
    const auto def = run_experiment(parse_config(tiny("Defense2", "[defense]\npd_values = 0, 0.05\n")));
    ASSERT_EQ(def.rows.size(), 2u);
    EXPECT_EQ(def.metric(def.rows[0], "attack_success_probability"), spoof.metric(spoof.rows[0], "success_probability"));
    EXPECT_EQ(def.metric(def.rows[0], "n_flipped"), 0.0);
    EXPECT_GT(def.metric(def.rows[1], "n_flipped"), 0.0);
}

TEST(RunExperiment, RuntimeErrorsNameTheSeed) {
    // Too few accepted observations for the GAN's batch size.
    auto cfg = parse_config(tiny("Spoof2", "", "seed = 9\n"));
    cfg.n_observations = 30;
    try {
        run_experiment(cfg);
        FAIL();
    } catch (const ValidationError&) {
        FAIL() << "expected a runtime error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("seed 9"), std::string::npos) << e.what();
    }
}

TEST(EmitReport, EmptyReportHasHeaderOnly) {
    MetricsReport r;
    r.scenario = "Spoof2";
    detail::set_columns(r, ScenarioId::Spoof2);
    const auto csv = emit_report(r, ReportFormat::Csv);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
    EXPECT_EQ(csv.rfind("kind,seed,gamma_db,", 0), 0u);
    EXPECT_NO_THROW(emit_report(r, ReportFormat::Markdown));
}

TEST(EmitReport, CsvReparsesToTwelveDigits) {
    const auto r = synthetic("Defense1", {0.0, 0.01, 0.2}, 4, 3);
    const auto rows = parse_csv(emit_report(r, ReportFormat::Csv));
    ASSERT_EQ(rows.size(), 1 + r.rows.size() + 2 * 3);
    const std::size_t first_metric = 2 + r.key_columns.size();
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& cells = rows[i + 1];
        EXPECT_EQ(cells[0], "SEED");
        EXPECT_EQ(std::stoull(cells[1]), r.rows[i].seed);
        EXPECT_EQ(cells.back(), r.provenance.config_hash);
        for (std::size_t j = 0; j < r.metric_columns.size(); ++j) {
            const double got = std::strtod(cells[first_metric + j].c_str(), nullptr);
            const double want = r.rows[i].metrics[j];
            EXPECT_LE(std::abs(got - want), 1e-12 * std::abs(want));
        }
    }
    // Aggregates recomputed from the per-seed rows.
    const auto agg = r.aggregate();
    for (std::size_t a = 0; a < agg.size(); ++a) {
        const auto& mean_cells = rows[1 + r.rows.size() + 2 * a];
        const auto& std_cells = rows[2 + r.rows.size() + 2 * a];
        EXPECT_EQ(mean_cells[0], "AGGREGATE");
        EXPECT_EQ(mean_cells[1], "mean");
        EXPECT_EQ(std_cells[1], "std");
        for (std::size_t j = 0; j < r.metric_columns.size(); ++j) {
            std::vector<double> xs;
            for (const auto& row : r.rows)
                if (row.keys == agg[a].keys) xs.push_back(row.metrics[j]);
            double m = 0.0, v = 0.0;
            for (double x : xs) m += x / static_cast<double>(xs.size());
            for (double x : xs) v += (x - m) * (x - m) / static_cast<double>(xs.size() - 1);
            EXPECT_NEAR(std::strtod(mean_cells[first_metric + j].c_str(), nullptr), m, 1e-9 * (1 + std::abs(m)));
            EXPECT_NEAR(std::strtod(std_cells[first_metric + j].c_str(), nullptr), std::sqrt(v), 1e-9 * (1 + std::sqrt(v)));
        }
    }
}

TEST(EmitReport, SingleSeedStdIsZero) {
    const auto agg = synthetic("Baseline1", {0.0}, 1, 4).aggregate();
    for (double s : agg.at(0).stddev) EXPECT_EQ(s, 0.0);
}

TEST(EmitReport, MarkdownSpoofTableHasOneRowPerGamma) {
    const auto r = synthetic("Spoof2", {-3.0, 0.0, 3.0}, 2, 5);
    const auto md = emit_report(r, ReportFormat::Markdown);
    EXPECT_NE(md.find(r.provenance.config_hash), std::string::npos);
    const auto start = md.find("| γ (dB) | Attack success probability |");
    ASSERT_NE(start, std::string::npos);
    std::istringstream in(md.substr(start));
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    std::vector<std::string> body;
    while (std::getline(in, line) && !line.empty()) body.push_back(line);
    ASSERT_EQ(body.size(), 3u);
    EXPECT_EQ(body[0].rfind("| -3 |", 0), 0u);
    EXPECT_EQ(body[2].rfind("| 3 |", 0), 0u);
}

TEST(EmitReport, MarkdownDefenseTableHasOneRowPerRate) {
    const auto r = synthetic("Defense2", {0.0, 0.01, 0.02, 0.05, 0.1, 0.2}, 2, 6);
    const auto md = emit_report(r, ReportFormat::Markdown);
    const auto start = md.find("| p_d | Attack success probability |");
    ASSERT_NE(start, std::string::npos);
    std::istringstream in(md.substr(start));
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    int n = 0;
    while (std::getline(in, line) && !line.empty()) ++n;
    EXPECT_EQ(n, 6);
}

TEST(ShippedConfigs, AllParseAndRoundTrip) {
    int n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(AML5G_CONFIG_DIR)) {
        if (entry.path().extension() != ".cfg") continue;
        std::ifstream in(entry.path());
        std::stringstream text;
        text << in.rdbuf();
        const auto cfg = parse_config(text.str());
        EXPECT_EQ(echo_config(parse_config(echo_config(cfg))), echo_config(cfg)) << entry.path();
        ++n;
    }
    EXPECT_GE(n, 6);
}
