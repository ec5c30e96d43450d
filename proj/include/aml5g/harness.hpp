#pragma once

// Experiment configuration (INI), seeded orchestration, aggregation and
// report emission.
//
// Config grammar: `key = value` lines, `;` or `#` comments, optional
// `[section]` headers. Keys are unique across the document; a section, when
// present, must be one of experiment, train, gan, scenario1, scenario2,
// defense, ofdm and must be the key's home section. Lists are comma separated.

#include <aml5g/defense.hpp>
#include <aml5g/scenario1.hpp>
#include <aml5g/scenario2.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <functional>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace aml5g {

inline constexpr std::string_view artifact_version = "1.0.0";

enum class ScenarioId { Baseline1, Attack1, Defense1, Auth2, Spoof2, Defense2 };

inline std::string_view to_string(ScenarioId s) {
    switch (s) {
        case ScenarioId::Baseline1: return "Baseline1";
        case ScenarioId::Attack1: return "Attack1";
        case ScenarioId::Defense1: return "Defense1";
        case ScenarioId::Auth2: return "Auth2";
        case ScenarioId::Spoof2: return "Spoof2";
        case ScenarioId::Defense2: return "Defense2";
    }
    return "?";
}

inline ScenarioId parse_scenario(std::string_view s) {
    for (auto id : {ScenarioId::Baseline1, ScenarioId::Attack1, ScenarioId::Defense1, ScenarioId::Auth2,
                    ScenarioId::Spoof2, ScenarioId::Defense2})
        if (to_string(id) == s) return id;
    throw ValidationError("scenario", "unknown scenario '" + std::string(s) + "'");
}

struct ExperimentConfig {
    ScenarioId scenario = ScenarioId::Baseline1;
    std::uint64_t seed = 1;
    int n_seeds = 1;
    int n_trials = 500;           // spoof transmissions per attack
    int n_slots = 2000;           // slots per baseline / attack run
    int n_observations = 1000;    // adversary training observations (both scenarios)
    int n_defender_samples = 1000;

    TrainConfig train;                               // C_T, C_A, C_S
    TrainConfig gan = TrainConfig::gan_defaults();  // generator and discriminator

    Scenario1World world1;
    double budget_fraction = 0.2;  // budget = fraction * n_slots * data_units

    AuthWorld world2;
    AuthConfig auth;
    std::vector<double> gamma_values = {-3.0, 0.0, 3.0};

    double p_d = 0.0;  // defense ratio applied while the adversary observes (Attack1, Spoof2)
    std::vector<double> pd_values = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
    bool defense_all_time = false;

    void validate() const {
        if (n_seeds < 1) throw ValidationError("n_seeds", "must be >= 1");
        if (n_trials < 1) throw ValidationError("n_trials", "must be >= 1");
        if (n_slots < 1) throw ValidationError("n_slots", "must be >= 1");
        if (n_observations < 2) throw ValidationError("n_observations", "must be >= 2");
        if (n_defender_samples < 2) throw ValidationError("n_defender_samples", "must be >= 2");
        train.validate();
        gan.validate();
        world1.validate();
        if (!(budget_fraction >= 0)) throw ValidationError("budget_fraction", "must be >= 0");
        world2.validate();
        auth.validate();
        if (gamma_values.empty()) throw ValidationError("gamma_values", "must not be empty");
        for (double g : gamma_values) {
            AuthConfig a = auth;
            a.gamma_db = g;
            try {
                a.validate();
            } catch (const ValidationError& e) {
                throw ValidationError("gamma_values", e.what());
            }
        }
        DefensePolicy{p_d}.validate();
        if (pd_values.empty()) throw ValidationError("pd_values", "must not be empty");
        for (double p : pd_values)
            if (!(p >= 0 && p <= 1)) throw ValidationError("pd_values", "every entry must be in [0, 1]");
    }

    EnergyBudget budget() const {
        return EnergyBudget{budget_fraction * n_slots * world1.timing.data_units, 0.0};
    }
};

namespace detail {

inline std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_double(v[i]);
    return s;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& field, const std::string& text) {
    const std::string t = trim(text);
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    if (t == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc{} || r.ptr != t.data() + t.size() || t.empty())
        throw ValidationError(field, "expected a number, got '" + t + "'");
    return v;
}

inline long long parse_int(const std::string& field, const std::string& text) {
    const std::string t = trim(text);
    long long v = 0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc{} || r.ptr != t.data() + t.size() || t.empty())
        throw ValidationError(field, "expected an integer, got '" + t + "'");
    return v;
}

inline bool parse_bool(const std::string& field, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ValidationError(field, "expected true or false, got '" + t + "'");
}

inline std::vector<double> parse_list(const std::string& field, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(field, item));
    if (out.empty()) throw ValidationError(field, "expected a comma-separated list");
    return out;
}

/// One config key: home section, reader and writer.
struct KeySpec {
    std::string section;
    std::function<void(ExperimentConfig&, const std::string&)> read;
    std::function<std::string(const ExperimentConfig&)> write;
};

template <typename Get>
KeySpec num_key(std::string section, std::string name, Get get) {
    return {std::move(section),
            [name, get](ExperimentConfig& c, const std::string& v) { get(c) = parse_double(name, v); },
            [get](const ExperimentConfig& c) { return fmt_double(get(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Get>
KeySpec int_key(std::string section, std::string name, Get get) {
    return {std::move(section),
            [name, get](ExperimentConfig& c, const std::string& v) {
                const long long x = parse_int(name, v);
                using T = std::remove_reference_t<decltype(get(c))>;
                if constexpr (std::is_unsigned_v<T>) {
                    if (x < 0) throw ValidationError(name, "must be >= 0");
                }
                if (x < static_cast<long long>(std::numeric_limits<int>::min()) && !std::is_same_v<T, std::uint64_t>)
                    throw ValidationError(name, "out of range");
                get(c) = static_cast<T>(x);
            },
            [get](const ExperimentConfig& c) { return std::to_string(get(const_cast<ExperimentConfig&>(c))); }};
}

inline const std::map<std::string, KeySpec>& key_table() {
    static const std::map<std::string, KeySpec> table = [] {
        std::map<std::string, KeySpec> t;
        using C = ExperimentConfig;
        t["scenario"] = {"experiment", [](C& c, const std::string& v) { c.scenario = parse_scenario(trim(v)); },
                         [](const C& c) { return std::string(to_string(c.scenario)); }};
        t["seed"] = int_key("experiment", "seed", [](C& c) -> std::uint64_t& { return c.seed; });
        t["n_seeds"] = int_key("experiment", "n_seeds", [](C& c) -> int& { return c.n_seeds; });
        t["n_trials"] = int_key("experiment", "n_trials", [](C& c) -> int& { return c.n_trials; });
        t["n_slots"] = int_key("experiment", "n_slots", [](C& c) -> int& { return c.n_slots; });
        t["n_observations"] = int_key("experiment", "n_observations", [](C& c) -> int& { return c.n_observations; });
        t["n_defender_samples"] =
            int_key("experiment", "n_defender_samples", [](C& c) -> int& { return c.n_defender_samples; });

        t["batch_size"] = int_key("train", "batch_size", [](C& c) -> int& { return c.train.batch_size; });
        t["n_steps"] = int_key("train", "n_steps", [](C& c) -> int& { return c.train.n_steps; });
        t["learning_rate"] = num_key("train", "learning_rate", [](C& c) -> double& { return c.train.learning_rate; });
        t["beta1"] = num_key("train", "beta1", [](C& c) -> double& { return c.train.beta1; });
        t["beta2"] = num_key("train", "beta2", [](C& c) -> double& { return c.train.beta2; });
        t["optimizer"] = {"train",
                          [](C& c, const std::string& v) {
                              const auto s = trim(v);
                              if (s == "adam") c.train.optimizer = OptimizerKind::Adam;
                              else if (s == "sgd") c.train.optimizer = OptimizerKind::Sgd;
                              else throw ValidationError("optimizer", "expected adam or sgd");
                          },
                          [](const C& c) { return std::string(c.train.optimizer == OptimizerKind::Adam ? "adam" : "sgd"); }};

        t["gan_batch_size"] = int_key("gan", "gan_batch_size", [](C& c) -> int& { return c.gan.batch_size; });
        t["gan_n_steps"] = int_key("gan", "gan_n_steps", [](C& c) -> int& { return c.gan.n_steps; });
        t["gan_learning_rate"] = num_key("gan", "gan_learning_rate", [](C& c) -> double& { return c.gan.learning_rate; });
        t["gan_beta1"] = num_key("gan", "gan_beta1", [](C& c) -> double& { return c.gan.beta1; });

        t["occupancy"] = {"scenario1",
                          [](C& c, const std::string& v) {
                              const auto s = trim(v);
                              if (s == "iid") c.world1.occupancy.kind = OccupancyKind::Iid;
                              else if (s == "markov") c.world1.occupancy.kind = OccupancyKind::Markov;
                              else throw ValidationError("occupancy", "expected iid or markov");
                          },
                          [](const C& c) { return std::string(c.world1.occupancy.kind == OccupancyKind::Iid ? "iid" : "markov"); }};
        t["p_busy"] = num_key("scenario1", "p_busy", [](C& c) -> double& { return c.world1.occupancy.p_busy; });
        t["p_idle_to_busy"] =
            num_key("scenario1", "p_idle_to_busy", [](C& c) -> double& { return c.world1.occupancy.p_idle_to_busy; });
        t["p_busy_to_idle"] =
            num_key("scenario1", "p_busy_to_idle", [](C& c) -> double& { return c.world1.occupancy.p_busy_to_idle; });
        t["sensing_units"] = num_key("scenario1", "sensing_units", [](C& c) -> double& { return c.world1.timing.sensing_units; });
        t["data_units"] = num_key("scenario1", "data_units", [](C& c) -> double& { return c.world1.timing.data_units; });
        t["budget_fraction"] = num_key("scenario1", "budget_fraction", [](C& c) -> double& { return c.budget_fraction; });
        t["radar_tx_dbm"] = num_key("scenario1", "radar_tx_dbm", [](C& c) -> double& { return c.world1.radar_tx_dbm; });
        t["t_tx_dbm"] = num_key("scenario1", "t_tx_dbm", [](C& c) -> double& { return c.world1.t_tx_dbm; });
        t["jam_inr_at_t_db"] = num_key("scenario1", "jam_inr_at_t_db", [](C& c) -> double& { return c.world1.jam_inr_at_t_db; });
        t["ack_miss_prob"] = num_key("scenario1", "ack_miss_prob", [](C& c) -> double& { return c.world1.ack_miss_prob; });
        t["sinr_threshold_db"] =
            num_key("scenario1", "sinr_threshold_db", [](C& c) -> double& { return c.world1.sinr_threshold_db; });
        t["success_rule"] = {"scenario1",
                             [](C& c, const std::string& v) {
                                 const auto s = trim(v);
                                 if (s == "sinr") c.world1.success_rule = SuccessRule::Sinr;
                                 else if (s == "bit_errors") c.world1.success_rule = SuccessRule::BitErrors;
                                 else throw ValidationError("success_rule", "expected sinr or bit_errors");
                             },
                             [](const C& c) { return std::string(c.world1.success_rule == SuccessRule::Sinr ? "sinr" : "bit_errors"); }};

        t["gamma_db"] = num_key("scenario2", "gamma_db", [](C& c) -> double& { return c.auth.gamma_db; });
        t["gamma_values"] = {"scenario2", [](C& c, const std::string& v) { c.gamma_values = parse_list("gamma_values", v); },
                             [](const C& c) { return fmt_list(c.gamma_values); }};
        t["n_samples"] = int_key("scenario2", "n_samples", [](C& c) -> int& { return c.auth.n_samples; });
        t["power_spread_db"] = num_key("scenario2", "power_spread_db", [](C& c) -> double& { return c.world2.power_spread_db; });
        t["spoof_offset_db"] = num_key("scenario2", "spoof_offset_db", [](C& c) -> double& { return c.world2.spoof_offset_db; });
        t["observer_offset_db"] =
            num_key("scenario2", "observer_offset_db", [](C& c) -> double& { return c.world2.observer_offset_db; });
        t["observer_correlation"] =
            num_key("scenario2", "observer_correlation", [](C& c) -> double& { return c.world2.observer_correlation; });
        t["delay_spread_s"] = {"scenario2",
                               [](C& c, const std::string& v) {
                                   const double ds = parse_double("delay_spread_s", v);
                                   if (!(ds > 0)) throw ValidationError("delay_spread_s", "must be positive");
                                   c.world2.ue_channel = TdlProfile::exponential(ds);
                                   c.world1.channel = TdlProfile::exponential(ds);
                               },
                               [](const C& c) { return fmt_double(c.world2.ue_channel.delay_spread_s); }};

        t["p_d"] = num_key("defense", "p_d", [](C& c) -> double& { return c.p_d; });
        t["pd_values"] = {"defense", [](C& c, const std::string& v) { c.pd_values = parse_list("pd_values", v); },
                          [](const C& c) { return fmt_list(c.pd_values); }};
        t["all_time"] = {"defense", [](C& c, const std::string& v) { c.defense_all_time = parse_bool("all_time", v); },
                         [](const C& c) { return std::string(c.defense_all_time ? "true" : "false"); }};

        t["subcarrier_spacing_hz"] =
            num_key("ofdm", "subcarrier_spacing_hz", [](C& c) -> double& { return c.world2.ofdm.subcarrier_spacing_hz; });
        t["n_resource_blocks"] =
            int_key("ofdm", "n_resource_blocks", [](C& c) -> int& { return c.world2.ofdm.n_resource_blocks; });
        t["fft_size"] = int_key("ofdm", "fft_size", [](C& c) -> int& { return c.world2.ofdm.fft_size; });
        t["cp_len"] = int_key("ofdm", "cp_len", [](C& c) -> int& { return c.world2.ofdm.cp_len; });
        t["bits_per_symbol"] = int_key("ofdm", "bits_per_symbol", [](C& c) -> int& { return c.world2.ofdm.bits_per_symbol; });
        return t;
    }();
    return table;
}

inline const std::vector<std::string>& section_order() {
    static const std::vector<std::string> s = {"experiment", "train", "gan", "scenario1", "scenario2", "defense", "ofdm"};
    return s;
}

}  // namespace detail

/// Parses and validates a config document; every missing key takes its default.
inline ExperimentConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(Errc::parse_error, "line " + std::to_string(e.line()) + ": " + e.message());
    }
    ExperimentConfig cfg;
    const auto& keys = detail::key_table();
    const std::set<std::string> sections(detail::section_order().begin(), detail::section_order().end());
    auto apply = [&](const std::string& section, const std::string& key, const std::string& value) {
        const auto it = keys.find(key);
        if (it == keys.end()) throw ValidationError(key, "unknown key");
        if (!section.empty() && it->second.section != section)
            throw ValidationError(key, "belongs in section [" + it->second.section + "], not [" + section + "]");
        it->second.read(cfg, value);
    };
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            apply("", name, node.data());
            continue;
        }
        if (!sections.count(name)) throw ValidationError(name, "unknown section");
        for (const auto& [key, leaf] : node) apply(name, key, leaf.data());
    }
    cfg.validate();
    return cfg;
}

/// Every key with its effective value, grouped by section; parses back to the same config.
inline std::string echo_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    const auto& keys = detail::key_table();
    bool first = true;
    for (const auto& section : detail::section_order()) {
        os << (first ? "" : "\n") << '[' << section << "]\n";
        first = false;
        for (const auto& [name, spec] : keys)
            if (spec.section == section) os << name << " = " << spec.write(cfg) << '\n';
    }
    return os.str();
}

inline std::string config_hash(const std::string& echoed) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : echoed) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Provenance {
    std::string config_hash;
    std::string config_echo;
    std::vector<std::uint64_t> seeds;
    std::string version{artifact_version};
};

struct MetricsReport {
    std::string scenario;
    std::vector<std::string> key_columns;
    std::vector<std::string> metric_columns;

    struct Row {
        std::uint64_t seed = 0;
        std::vector<double> keys;
        std::vector<double> metrics;
    };
    std::vector<Row> rows;

    struct Aggregate {
        std::vector<double> keys;
        std::vector<double> mean;
        std::vector<double> stddev;  // sample standard deviation (0 for a single row)
        std::size_t n = 0;
    };

    Provenance provenance;

    /// Mean and sample std per distinct key tuple, in first-appearance order.
    std::vector<Aggregate> aggregate() const {
        std::vector<Aggregate> out;
        for (const auto& r : rows) {
            auto it = std::find_if(out.begin(), out.end(), [&](const Aggregate& a) { return a.keys == r.keys; });
            if (it == out.end()) {
                out.push_back({r.keys, std::vector<double>(metric_columns.size(), 0.0),
                               std::vector<double>(metric_columns.size(), 0.0), 0});
                it = out.end() - 1;
            }
            ++it->n;
            for (std::size_t j = 0; j < r.metrics.size(); ++j) it->mean[j] += r.metrics[j];
        }
        for (auto& a : out)
            for (auto& m : a.mean) m /= static_cast<double>(a.n);
        for (const auto& r : rows) {
            auto it = std::find_if(out.begin(), out.end(), [&](const Aggregate& a) { return a.keys == r.keys; });
            for (std::size_t j = 0; j < r.metrics.size(); ++j) {
                const double d = r.metrics[j] - it->mean[j];
                it->stddev[j] += d * d;
            }
        }
        for (auto& a : out)
            for (auto& s : a.stddev) s = a.n > 1 ? std::sqrt(s / static_cast<double>(a.n - 1)) : 0.0;
        return out;
    }

    double metric(const Row& r, std::string_view column) const {
        for (std::size_t j = 0; j < metric_columns.size(); ++j)
            if (metric_columns[j] == column) return r.metrics[j];
        throw Error(Errc::invalid_config, "no metric column '" + std::string(column) + "'");
    }
};

namespace detail {

using SeedRows = std::vector<MetricsReport::Row>;

inline MetricsReport::Row make_row(std::uint64_t seed, std::vector<double> keys, std::vector<double> metrics) {
    return {seed, std::move(keys), std::move(metrics)};
}

inline TrainConfig seeded(TrainConfig c, std::uint64_t seed, std::string_view role) {
    c.seed = RandomStream(seed).child(role).key();
    return c;
}

struct Scenario1Models {
    SensingModel ct;
    std::optional<Surrogate> ca;
    std::size_t n_flipped = 0;
    std::size_t out_of_scope = 0;
};

inline Scenario1Models scenario1_models(const ExperimentConfig& cfg, std::uint64_t seed, bool with_surrogate) {
    const RandomStream root(seed);
    Scenario1Models m;
    RandomStream data_rng = root.child("defender_data");
    const auto data = build_defender_dataset(cfg.world1, static_cast<std::size_t>(cfg.n_defender_samples), data_rng);
    RandomStream ct_rng = root.child("ct_init");
    m.ct = train_sensing_classifier(data, seeded(cfg.train, seed, "ct_train"), ct_rng);
    if (!with_surrogate) return m;
    const auto n_obs = static_cast<std::size_t>(cfg.n_observations);
    RandomStream obs_rng = root.child("observation");
    std::vector<bool> withheld;
    if (cfg.p_d > 0) {
        RandomStream probe = obs_rng;
        const auto clean = run_baseline(cfg.world1, m.ct.model, n_obs, probe);
        const DefensePolicy policy{cfg.p_d, DefenseSelection::TopConfidence, DefenseScope::TransmitDecisions};
        const auto out = apply_defense(clean.ct_predictions, policy);
        withheld.assign(n_obs, false);
        for (std::size_t i : out.flipped) withheld[i] = true;
        m.n_flipped = out.flipped.size();
        m.out_of_scope = out_of_scope_flips(clean.ct_predictions, out.decisions, policy);
    }
    const auto adv = build_adversary_dataset(cfg.world1, m.ct.model, n_obs, obs_rng, withheld);
    RandomStream ca_rng = root.child("ca_init");
    m.ca = train_surrogate(adv, seeded(cfg.train, seed, "ca_train"), ca_rng);
    return m;
}

inline RandomStream gamma_root(const RandomStream& root, double gamma_db) {
    if (std::isinf(gamma_db)) return root.child("gamma_noiseless");
    return root.child("gamma", static_cast<std::uint64_t>(std::llround(gamma_db * 1000.0)));
}

inline SeedRows run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    const RandomStream root(seed);
    const auto n_slots = static_cast<std::size_t>(cfg.n_slots);
    const auto n_trials = static_cast<std::size_t>(cfg.n_trials);
    SeedRows rows;
    switch (cfg.scenario) {
        case ScenarioId::Baseline1: {
            const auto m = scenario1_models(cfg, seed, false);
            RandomStream run_rng = root.child("operation");
            const auto base = run_baseline(cfg.world1, m.ct.model, n_slots, run_rng);
            rows.push_back(make_row(seed, {}, {m.ct.idle_detection, m.ct.busy_error, base.metrics.normalized_throughput(),
                                               base.metrics.busy_detection_error(), base.metrics.incumbent_protection()}));
            break;
        }
        case ScenarioId::Attack1: {
            const auto m = scenario1_models(cfg, seed, true);
            const RandomStream op = root.child("operation");
            RandomStream r0 = op, r1 = op, r2 = op;
            const auto base = run_baseline(cfg.world1, m.ct.model, n_slots, r0);
            const auto jd = run_attack(cfg.world1, m.ct.model, m.ca->model, AttackMode::JamData, cfg.budget(), n_slots, r1);
            const auto js = run_attack(cfg.world1, m.ct.model, m.ca->model, AttackMode::JamSensing, cfg.budget(), n_slots, r2);
            const double red_d = throughput_reduction(base.metrics, jd.metrics);
            const double red_s = throughput_reduction(base.metrics, js.metrics);
            std::size_t js_idle = 0, js_idle_busy = 0;
            for (const auto& s : js.trace)
                if (s.jam_action == JamAction::JamSensing && !s.truth_busy) {
                    ++js_idle;
                    js_idle_busy += s.ct_decision == CtDecision::Busy;
                }
            rows.push_back(make_row(
                seed, {},
                {m.ct.idle_detection, m.ct.busy_error, m.ca->report.ack_detection, m.ca->report.no_ack_error,
                 base.metrics.normalized_throughput(), red_d, jd.metrics.unnecessary_jamming_rate(), jd.metrics.energy_spent,
                 red_s, js.metrics.unnecessary_jamming_rate(), js.metrics.energy_spent,
                 js_idle ? double(js_idle_busy) / double(js_idle) : 1.0, red_s >= red_d ? 1.0 : 0.0,
                 double(m.out_of_scope)}));
            break;
        }
        case ScenarioId::Defense1: {
            const auto m = scenario1_models(cfg, seed, false);
            const auto table = evaluate_defense_scenario1(cfg.pd_values, cfg.world1, m.ct.model,
                                                          static_cast<std::size_t>(cfg.n_observations), n_slots,
                                                          cfg.budget(), seeded(cfg.train, seed, "ca_train"),
                                                          root.child("defense"), cfg.defense_all_time);
            for (const auto& r : table)
                rows.push_back(make_row(seed, {r.p_d},
                                        {r.surrogate_no_ack_error, r.surrogate_ack_detection, r.attack_throughput_reduction,
                                         r.defender_throughput_cost, double(r.n_flipped), double(r.out_of_scope)}));
            break;
        }
        case ScenarioId::Auth2: {
            for (double g : cfg.gamma_values) {
                AuthConfig a = cfg.auth;
                a.gamma_db = g;
                const RandomStream gr = gamma_root(root, g);
                RandomStream link_rng = gr.child("links");
                const auto links = AuthLinks::draw(cfg.world2, link_rng);
                RandomStream data_rng = gr.child("auth_data");
                const auto data = build_auth_dataset(a, cfg.world2, links, data_rng);
                RandomStream init_rng = gr.child("cs_init");
                const auto cs = train_auth_classifier(data, seeded(cfg.train, seed, "cs_train"), init_rng);
                rows.push_back(make_row(seed, {g}, {cs.test_accuracy, cs.train_accuracy}));
            }
            break;
        }
        case ScenarioId::Spoof2: {
            for (double g : cfg.gamma_values) {
                AuthConfig a = cfg.auth;
                a.gamma_db = g;
                const RandomStream gr = gamma_root(root, g);
                const auto setup = prepare_scenario2(a, cfg.world2, seeded(cfg.train, seed, "cs_train"),
                                                     static_cast<std::size_t>(cfg.n_observations), gr);
                const DefensePolicy policy{cfg.p_d, DefenseSelection::TopConfidence, DefenseScope::AuthDecisions};
                const auto defended = apply_defense(setup.observations.decisions, policy);
                std::vector<int> labels;
                for (const auto& d : defended.decisions) labels.push_back(d.label);
                const auto spoof = spoof_with_labels(setup, labels, a, cfg.world2, seeded(cfg.gan, seed, "gan_train"), n_trials, gr);
                const auto replay = replay_spoof(setup, a, cfg.world2, n_trials, gr);
                const auto untrained = untrained_spoof(setup, a, cfg.world2, n_trials, gr);
                rows.push_back(make_row(seed, {g},
                                        {setup.cs.test_accuracy, spoof.gan.success_probability, replay.success_probability,
                                         untrained.success_probability, spoof.final_discriminator_accuracy,
                                         double(spoof.n_real_rows), double(spoof.mode_collapse_warning),
                                         double(out_of_scope_flips(setup.observations.decisions, defended.decisions, policy))}));
            }
            break;
        }
        case ScenarioId::Defense2: {
            // Same streams as Spoof2 at this gamma, so p_d = 0 repeats the undefended attack.
            const RandomStream gr = gamma_root(root, cfg.auth.gamma_db);
            const auto setup = prepare_scenario2(cfg.auth, cfg.world2, seeded(cfg.train, seed, "cs_train"),
                                                 static_cast<std::size_t>(cfg.n_observations), gr);
            const auto table = evaluate_defense_scenario2(cfg.pd_values, setup, cfg.auth, cfg.world2,
                                                          seeded(cfg.gan, seed, "gan_train"), n_trials, gr);
            for (const auto& r : table)
                rows.push_back(make_row(seed, {r.p_d},
                                        {r.success_probability, setup.cs.test_accuracy, double(r.n_flipped),
                                         double(r.out_of_scope)}));
            break;
        }
    }
    return rows;
}

inline void set_columns(MetricsReport& r, ScenarioId s) {
    switch (s) {
        case ScenarioId::Baseline1:
            r.metric_columns = {"ct_idle_detection", "ct_busy_error", "normalized_throughput", "busy_detection_error",
                                "incumbent_protection"};
            break;
        case ScenarioId::Attack1:
            r.metric_columns = {"ct_idle_detection", "ct_busy_error", "ca_ack_detection", "ca_no_ack_error",
                                "normalized_throughput", "jamdata_reduction", "jamdata_unnecessary_rate",
                                "jamdata_energy", "jamsensing_reduction", "jamsensing_unnecessary_rate",
                                "jamsensing_energy", "jamsensing_idle_to_busy", "sensing_beats_data", "out_of_scope_flips"};
            break;
        case ScenarioId::Defense1:
            r.key_columns = {"p_d"};
            r.metric_columns = {"surrogate_no_ack_error", "surrogate_ack_detection", "attack_throughput_reduction",
                                "defender_throughput_cost", "n_flipped", "out_of_scope_flips"};
            break;
        case ScenarioId::Auth2:
            r.key_columns = {"gamma_db"};
            r.metric_columns = {"cs_test_accuracy", "cs_train_accuracy"};
            break;
        case ScenarioId::Spoof2:
            r.key_columns = {"gamma_db"};
            r.metric_columns = {"cs_test_accuracy", "success_probability", "replay_success", "untrained_success",
                                "discriminator_accuracy", "n_real_rows", "mode_collapse_warning", "out_of_scope_flips"};
            break;
        case ScenarioId::Defense2:
            r.key_columns = {"p_d"};
            r.metric_columns = {"attack_success_probability", "cs_test_accuracy", "n_flipped", "out_of_scope_flips"};
            break;
    }
}

}  // namespace detail

/// Runs seeds seed .. seed + n_seeds - 1 (concurrently when `threads` > 1)
/// and merges the rows in seed order.
inline MetricsReport run_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
    cfg.validate();
    MetricsReport report;
    report.scenario = std::string(to_string(cfg.scenario));
    detail::set_columns(report, cfg.scenario);
    report.provenance.config_echo = echo_config(cfg);
    report.provenance.config_hash = config_hash(report.provenance.config_echo);

    const auto n = static_cast<std::size_t>(cfg.n_seeds);
    std::vector<detail::SeedRows> per_seed(n);
    auto work = [&](std::size_t i) {
        const std::uint64_t seed = cfg.seed + i;
        try {
            per_seed[i] = detail::run_seed(cfg, seed);
        } catch (const ValidationError&) {
            throw;
        } catch (const Error& e) {
            throw Error(e.code(), "seed " + std::to_string(seed) + ": " + e.what());
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> jobs;
        for (unsigned t = 0; t < threads; ++t)
            jobs.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next++; i < n; i = next++) work(i);
            }));
        for (auto& j : jobs) j.get();
    }
    for (std::size_t i = 0; i < n; ++i) {
        report.provenance.seeds.push_back(cfg.seed + i);
        for (auto& r : per_seed[i]) report.rows.push_back(std::move(r));
    }
    return report;
}

enum class ReportFormat { Csv, Markdown };

namespace detail {

inline std::string fmt_cell(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_pct(double mean, double sd) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f%% ± %.1f", 100.0 * mean, 100.0 * sd);
    return buf;
}

inline std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace detail

/// CSV: header, one row per seed (kind SEED), then AGGREGATE rows holding
/// the mean and the sample std (seed column "mean" / "std"). Every row ends
/// with the config hash.
inline std::string emit_report(const MetricsReport& r, ReportFormat format) {
    std::ostringstream os;
    const auto agg = r.aggregate();
    if (format == ReportFormat::Csv) {
        os << "kind,seed";
        for (const auto& k : r.key_columns) os << ',' << k;
        for (const auto& m : r.metric_columns) os << ',' << m;
        os << ",config_hash\n";
        for (const auto& row : r.rows) {
            os << "SEED," << row.seed;
            for (double k : row.keys) os << ',' << detail::fmt_cell(k);
            for (double m : row.metrics) os << ',' << detail::fmt_cell(m);
            os << ',' << r.provenance.config_hash << '\n';
        }
        for (const auto& a : agg) {
            for (int which = 0; which < 2; ++which) {
                os << "AGGREGATE," << (which == 0 ? "mean" : "std");
                for (double k : a.keys) os << ',' << detail::fmt_cell(k);
                for (double v : which == 0 ? a.mean : a.stddev) os << ',' << detail::fmt_cell(v);
                os << ',' << r.provenance.config_hash << '\n';
            }
        }
        return os.str();
    }

    os << "## " << r.scenario << "\n\n";
    os << "config hash `" << r.provenance.config_hash << "`, version " << r.provenance.version << ", seeds";
    for (auto s : r.provenance.seeds) os << ' ' << s;
    os << "\n\n";
    const bool percent_table = r.scenario == "Spoof2" || r.scenario == "Defense2";
    if (percent_table) {
        const bool spoof = r.scenario == "Spoof2";
        os << (spoof ? "| γ (dB) | Attack success probability |\n|---|---|\n"
                     : "| p_d | Attack success probability |\n|---|---|\n");
        const std::string col = spoof ? "success_probability" : "attack_success_probability";
        std::size_t j = 0;
        while (r.metric_columns[j] != col) ++j;
        for (const auto& a : agg) os << "| " << detail::fmt_short(a.keys[0]) << " | " << detail::fmt_pct(a.mean[j], a.stddev[j]) << " |\n";
        os << '\n';
    }
    os << '|';
    for (const auto& k : r.key_columns) os << ' ' << k << " |";
    for (const auto& m : r.metric_columns) os << ' ' << m << " |";
    os << "\n|";
    for (std::size_t i = 0; i < r.key_columns.size() + r.metric_columns.size(); ++i) os << "---|";
    os << '\n';
    for (const auto& a : agg) {
        os << '|';
        for (double k : a.keys) os << ' ' << detail::fmt_short(k) << " |";
        for (std::size_t j = 0; j < a.mean.size(); ++j)
            os << ' ' << detail::fmt_short(a.mean[j]) << " ± " << detail::fmt_short(a.stddev[j]) << " |";
        os << '\n';
    }
    return os.str();
}

}  // namespace aml5g
