#pragma once

// Time-slotted spectrum sharing between a pulsed radar and a 5G link,
// the adversary's surrogate of the defender's sensing classifier, and
// budgeted jamming of either the sensing or the data phase.

#include <aml5g/neural.hpp>
#include <aml5g/signal.hpp>

#include <cmath>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

namespace aml5g {

enum class OccupancyKind { Iid, Markov };

struct OccupancyModel {
    OccupancyKind kind = OccupancyKind::Iid;
    double p_busy = 0.1;
    double p_idle_to_busy = 0.1;
    double p_busy_to_idle = 0.5;

    void validate() const {
        auto prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(name, "must be in [0, 1]");
        };
        prob(p_busy, "p_busy");
        prob(p_idle_to_busy, "p_idle_to_busy");
        prob(p_busy_to_idle, "p_busy_to_idle");
    }

    double stationary_busy() const {
        if (kind == OccupancyKind::Iid) return p_busy;
        const double s = p_idle_to_busy + p_busy_to_idle;
        return s > 0 ? p_idle_to_busy / s : 0.0;
    }
};

/// Channel occupancy sequence; one uniform draw per slot.
inline std::vector<bool> draw_occupancy(const OccupancyModel& m, std::size_t n_slots, RandomStream& rng) {
    m.validate();
    std::vector<bool> busy(n_slots);
    bool state = false;
    for (std::size_t t = 0; t < n_slots; ++t) {
        const double u = rng.uniform();
        if (m.kind == OccupancyKind::Iid || t == 0) {
            state = u < (m.kind == OccupancyKind::Iid ? m.p_busy : m.stationary_busy());
        } else {
            state = state ? !(u < m.p_busy_to_idle) : u < m.p_idle_to_busy;
        }
        busy[t] = state;
    }
    return busy;
}

struct SlotTiming {
    double sensing_units = 1.0;
    double data_units = 9.0;

    void validate() const {
        if (!(sensing_units > 0)) throw ValidationError("sensing_units", "must be positive");
        if (!(data_units > 0)) throw ValidationError("data_units", "must be positive");
    }
};

struct EnergyBudget {
    double total_units = 0.0;
    double spent_units = 0.0;

    void validate() const {
        if (!(total_units >= 0)) throw ValidationError("total_units", "must be non-negative");
        if (!(spent_units >= 0 && spent_units <= total_units))
            throw ValidationError("spent_units", "must lie in [0, total_units]");
    }
    double remaining() const { return total_units - spent_units; }
    bool can_spend(double units) const { return units <= remaining() + 1e-9 * std::max(1.0, total_units); }
    void spend(double units) {
        if (!can_spend(units)) throw Error(Errc::invalid_config, "energy budget exceeded");
        spent_units = std::min(total_units, spent_units + units);
    }
};

enum class CtDecision { Idle, Busy };
enum class JamAction { None, JamSensing, JamData };
enum class AckPrediction { Ack, NoAck };
enum class AttackMode { None, JamData, JamSensing };
enum class SuccessRule { Sinr, BitErrors };

inline std::string_view to_string(CtDecision d) { return d == CtDecision::Idle ? "Idle" : "Busy"; }
inline std::string_view to_string(AckPrediction p) { return p == AckPrediction::Ack ? "Ack" : "NoAck"; }
inline std::string_view to_string(JamAction a) {
    switch (a) {
        case JamAction::JamSensing: return "JamSensing";
        case JamAction::JamData: return "JamData";
        default: return "None";
    }
}
inline std::string_view to_string(AttackMode m) {
    switch (m) {
        case AttackMode::JamSensing: return "JamSensing";
        case AttackMode::JamData: return "JamData";
        default: return "None";
    }
}
inline AttackMode parse_attack_mode(std::string_view s) {
    if (s == "None") return AttackMode::None;
    if (s == "JamData") return AttackMode::JamData;
    if (s == "JamSensing") return AttackMode::JamSensing;
    throw Error(Errc::unknown_mode, "unknown attack mode '" + std::string(s) + "'");
}

/// Defender label convention for the sensing classifier C_T.
inline constexpr int ct_idle_label = 0;
inline constexpr int ct_busy_label = 1;
/// Adversary label convention for the surrogate C_A.
inline constexpr int ca_no_ack_label = 0;
inline constexpr int ca_ack_label = 1;

struct SlotRecord {
    bool truth_busy = false;
    CtDecision ct_decision = CtDecision::Idle;
    bool transmitted = false;
    JamAction jam_action = JamAction::None;
    bool ack = false;
    AckPrediction adversary_prediction = AckPrediction::NoAck;
};

using SlotTrace = std::vector<SlotRecord>;

/// Geometry, powers and waveforms of the sharing scenario. Powers are in dBm
/// against a common receiver noise floor.
struct Scenario1World {
    double sample_rate_hz = 1.92e6;
    std::size_t sensing_samples = 2000;
    std::size_t n_bins = 200;  // RSSI bins per window
    SlotTiming timing;
    double carrier_hz = 4e9;
    double noise_floor_dbm = -100.0;

    double radar_to_t_m = 1000.0;
    double radar_to_a_m = 1010.0;
    double radar_to_r_m = 1000.0;
    double t_to_r_m = 100.0;
    double t_to_a_m = 100.0;
    double a_to_r_m = 100.0;

    RadarConfig radar;
    double radar_tx_dbm = 14.5;  // radar 10 dB over the noise floor at T
    double t_tx_dbm = 0.0;
    double jam_inr_at_t_db = 10.0;  // sets the jammer's transmit power
    TdlProfile channel = TdlProfile::exponential();
    OfdmConfig data_ofdm = [] {
        OfdmConfig c;
        c.fft_size = 128;
        c.cp_len = 9;
        c.n_resource_blocks = 6;
        return c;
    }();

    OccupancyModel occupancy;
    SuccessRule success_rule = SuccessRule::Sinr;
    double sinr_threshold_db = 10.0;
    double max_bit_error_rate = 1e-3;
    double ack_miss_prob = 0.0;

    void validate() const {
        if (!(sample_rate_hz > 0)) throw ValidationError("sample_rate_hz", "must be positive");
        if (n_bins == 0 || sensing_samples < n_bins) throw ValidationError("sensing_samples", "must be >= n_bins > 0");
        timing.validate();
        for (double d : {radar_to_t_m, radar_to_a_m, radar_to_r_m, t_to_r_m, t_to_a_m, a_to_r_m})
            if (!(d > 0)) throw ValidationError("distance", "all distances must be positive");
        radar.validate();
        channel.validate();
        data_ofdm.validate();
        occupancy.validate();
        if (!(ack_miss_prob >= 0 && ack_miss_prob <= 1)) throw ValidationError("ack_miss_prob", "must be in [0, 1]");
        if (!(max_bit_error_rate >= 0 && max_bit_error_rate <= 1))
            throw ValidationError("max_bit_error_rate", "must be in [0, 1]");
    }

    std::size_t data_samples() const {
        return static_cast<std::size_t>(std::llround(static_cast<double>(sensing_samples) * timing.data_units / timing.sensing_units));
    }

    /// Received power over the noise floor, linear.
    double rx_lin(double tx_dbm, double distance_m) const {
        return db_to_lin(tx_dbm - free_space_loss_db({distance_m, carrier_hz}) - noise_floor_dbm);
    }
    double jam_tx_dbm() const {
        return noise_floor_dbm + jam_inr_at_t_db + free_space_loss_db({t_to_a_m, carrier_hz});
    }
};

namespace detail {

inline void add_into(std::vector<cplx>& dst, const IqFrame& src, double amplitude, std::size_t offset = 0) {
    const std::size_t n = std::min(dst.size(), src.size() > offset ? src.size() - offset : 0);
    for (std::size_t i = 0; i < n; ++i) dst[i] += amplitude * src.samples[i + offset];
}

inline std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace detail

/// Signal synthesis for one slot. Every random quantity is drawn from named
/// children of the slot's stream, so what the adversary does never shifts
/// the draws of the world itself.
class SlotSynth {
public:
    SlotSynth(const Scenario1World& w, const RandomStream& slot_rng, bool busy) : w_(w), rng_(slot_rng), busy_(busy) {
        if (busy_) {
            RadarConfig rc = w_.radar;
            rc.peak_power_lin = 1.0;
            RandomStream r = rng_.child("radar");
            rc.start_offset_s = r.uniform(0.0, rc.pulse_repetition_interval_s);
            radar_ = gen_radar_pulse(rc, w_.sensing_samples + w_.data_samples(), w_.sample_rate_hz, r);
        }
    }

    bool busy() const { return busy_; }

    /// Sensing window at T, optionally with the adversary's noise jamming.
    IqFrame sensing_at_t(bool jammed) const {
        IqFrame f = window("t_noise", w_.sensing_samples, 0, w_.radar_to_t_m);
        if (jammed) {
            RandomStream r = rng_.child("jam_sensing");
            const double p = w_.rx_lin(w_.jam_tx_dbm(), w_.t_to_a_m);
            const IqFrame j = noise_frame(f.size(), w_.sample_rate_hz, p, r);
            detail::add_into(f.samples, j, 1.0);
        }
        return f;
    }

    IqFrame sensing_at_a() const { return window("a_noise", w_.sensing_samples, 0, w_.radar_to_a_m); }

    /// Data window at A, including T's transmission when it happened.
    IqFrame data_at_a(bool transmitted) const {
        IqFrame f = window("a_data_noise", w_.data_samples(), w_.sensing_samples, w_.radar_to_a_m);
        if (transmitted) detail::add_into(f.samples, t_signal(), std::sqrt(w_.rx_lin(w_.t_tx_dbm, w_.t_to_a_m)));
        return f;
    }

    /// Whether R decodes T's data in this slot.
    bool data_success(bool jammed) const {
        const double s = w_.rx_lin(w_.t_tx_dbm, w_.t_to_r_m);
        const double radar = busy_ ? w_.rx_lin(w_.radar_tx_dbm, w_.radar_to_r_m) : 0.0;
        const double jam = jammed ? w_.rx_lin(w_.jam_tx_dbm(), w_.a_to_r_m) : 0.0;
        if (w_.success_rule == SuccessRule::Sinr) return lin_to_db(s / (1.0 + radar + jam)) >= w_.sinr_threshold_db;
        return bit_error_rate(s, jammed) <= w_.max_bit_error_rate;
    }

private:
    // One radar multipath realization per slot, shared by T and A; only the
    // path loss and the receiver noise differ between them.
    IqFrame window(const char* noise_name, std::size_t n, std::size_t radar_offset, double radar_distance) const {
        RandomStream nr = rng_.child(noise_name);
        IqFrame f = noise_frame(n, w_.sample_rate_hz, 1.0, nr);
        f.origin = busy_ ? Origin::Mixture : Origin::Noise;
        if (busy_) {
            RandomStream cr = rng_.child("radar_channel");
            const ChannelTaps taps = draw_tdl_taps(w_.channel, w_.sample_rate_hz, cr);
            const IqFrame rx = apply_taps(radar_, taps);
            detail::add_into(f.samples, rx, std::sqrt(w_.rx_lin(w_.radar_tx_dbm, radar_distance)), radar_offset);
        }
        return f;
    }

    const std::vector<std::uint8_t>& t_bits() const {
        if (bits_.empty()) {
            RandomStream r = rng_.child("t_bits");
            const std::size_t per_sym = w_.data_ofdm.bits_per_ofdm_symbol();
            const std::size_t sym = static_cast<std::size_t>(w_.data_ofdm.symbol_len());
            const std::size_t n_sym = (w_.data_samples() + sym - 1) / sym;
            bits_.resize(per_sym * n_sym);
            for (auto& b : bits_) b = r.bernoulli(0.5);
        }
        return bits_;
    }

    const IqFrame& t_signal() const {
        if (t_signal_.empty()) {
            t_signal_ = gen_ofdm_frame(w_.data_ofdm, t_bits());
            t_signal_.sample_rate_hz = w_.sample_rate_hz;
            t_signal_.origin = Origin::UeSignal;
        }
        return t_signal_;
    }

    double bit_error_rate(double s, bool jammed) const {
        IqFrame rx = t_signal();
        rx.scale(std::sqrt(s));
        RandomStream nr = rng_.child("r_noise");
        detail::add_into(rx.samples, noise_frame(rx.size(), w_.sample_rate_hz, 1.0, nr), 1.0);
        if (busy_) detail::add_into(rx.samples, radar_, std::sqrt(w_.rx_lin(w_.radar_tx_dbm, w_.radar_to_r_m)), w_.sensing_samples);
        if (jammed) {
            RandomStream jr = rng_.child("jam_data");
            detail::add_into(rx.samples, noise_frame(rx.size(), w_.sample_rate_hz, w_.rx_lin(w_.jam_tx_dbm(), w_.a_to_r_m), jr), 1.0);
        }
        rx.scale(1.0 / std::sqrt(s));
        const auto got = demod_ofdm(rx, w_.data_ofdm);
        const auto& sent = t_bits();
        std::size_t errors = 0;
        for (std::size_t i = 0; i < sent.size(); ++i) errors += got[i] != sent[i];
        return static_cast<double>(errors) / static_cast<double>(sent.size());
    }

    const Scenario1World& w_;
    RandomStream rng_;
    bool busy_;
    IqFrame radar_;
    mutable std::vector<std::uint8_t> bits_;
    mutable IqFrame t_signal_;
};

/// C_T's training set: sensing windows at T, labels alternating idle / busy.
inline LabeledDataset build_defender_dataset(const Scenario1World& w, std::size_t n_samples, RandomStream& rng) {
    w.validate();
    require(n_samples >= 2, Errc::invalid_config, "n_samples must be >= 2");
    LabeledDataset d;
    d.semantics = LabelSemantics::IdleBusy;
    d.features.resize(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(w.n_bins));
    d.labels.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const bool busy = i % 2 == 1;
        const SlotSynth s(w, rng.child(i), busy);
        const auto f = rssi_features(s.sensing_at_t(false), w.n_bins);
        for (std::size_t j = 0; j < f.size(); ++j) d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
        d.labels[i] = busy ? ct_busy_label : ct_idle_label;
    }
    return d;
}

struct Scenario1Metrics {
    std::size_t n_slots = 0;
    std::size_t idle_slots = 0;
    std::size_t busy_slots = 0;
    std::size_t transmissions = 0;
    std::size_t successes = 0;
    std::size_t busy_missed = 0;  // busy slots classified Idle
    std::size_t idle_detected = 0;
    std::size_t jam_actions = 0;
    std::size_t unnecessary_jams = 0;  // jams in slots with no ACK in the attack-free run
    double energy_spent = 0.0;

    double normalized_throughput() const { return idle_slots ? double(successes) / double(idle_slots) : 0.0; }
    double busy_detection_error() const { return busy_slots ? double(busy_missed) / double(busy_slots) : 0.0; }
    double idle_detection_rate() const { return idle_slots ? double(idle_detected) / double(idle_slots) : 0.0; }
    double incumbent_protection() const { return busy_slots ? 1.0 - busy_detection_error() : 1.0; }
    double unnecessary_jamming_rate() const { return jam_actions ? double(unnecessary_jams) / double(jam_actions) : 0.0; }
};

struct Scenario1Run {
    SlotTrace trace;
    Scenario1Metrics metrics;
    std::vector<Prediction> ct_predictions;  // C_T on the attack-free sensing window of each slot
    LabeledDataset adversary_data;  // filled when requested
};

/// Knobs of the slot loop beyond the world itself.
struct SlotLoopOptions {
    AttackMode mode = AttackMode::None;
    const Mlp<float>* surrogate = nullptr;
    EnergyBudget budget;
    bool collect_adversary_data = false;
    // Slots whose Idle decision the defender overrides to "do not transmit".
    std::vector<bool> withheld;
};

namespace detail {

inline std::vector<double> adversary_features(const Scenario1World& w, const SlotSynth& s, bool transmitted) {
    return concat(rssi_features(s.sensing_at_a(), w.n_bins), rssi_features(s.data_at_a(transmitted), w.n_bins));
}

inline CtDecision decide(const Mlp<float>& ct, const std::vector<double>& f) {
    return predict(ct, f).label == ct_busy_label ? CtDecision::Busy : CtDecision::Idle;
}

}  // namespace detail

/// The slot loop shared by the baseline, data collection and the attacks.
/// The adversary predicts from the features it would see without its own
/// jamming: the slot's sensing window and data window at A.
inline Scenario1Run run_slots(const Scenario1World& w, const Mlp<float>& ct, std::size_t n_slots, RandomStream& rng,
                              SlotLoopOptions opt = {}) {
    w.validate();
    opt.budget.validate();
    if (opt.mode != AttackMode::None && opt.surrogate == nullptr)
        throw Error(Errc::invalid_config, "an attack needs a trained surrogate");
    if (!opt.withheld.empty() && opt.withheld.size() != n_slots)
        throw Error(Errc::length_mismatch, "withheld mask must cover every slot");

    RandomStream occ_rng = rng.child("occupancy");
    const auto busy = draw_occupancy(w.occupancy, n_slots, occ_rng);
    RandomStream world_rng = rng.child("slots");
    RandomStream ack_rng = rng.child("ack_observation");

    Scenario1Run out;
    out.trace.resize(n_slots);
    auto& m = out.metrics;
    m.n_slots = n_slots;
    const bool need_features = opt.collect_adversary_data || opt.mode != AttackMode::None;
    if (opt.collect_adversary_data) {
        out.adversary_data.semantics = LabelSemantics::AckNoAck;
        out.adversary_data.features.resize(static_cast<Eigen::Index>(n_slots), static_cast<Eigen::Index>(2 * w.n_bins));
        out.adversary_data.labels.resize(n_slots);
    }
    const double jam_sense_cost = w.timing.sensing_units;
    const double jam_data_cost = w.timing.data_units;

    for (std::size_t t = 0; t < n_slots; ++t) {
        const SlotSynth s(w, world_rng.child(t), busy[t]);
        SlotRecord& rec = out.trace[t];
        rec.truth_busy = busy[t];

        // Attack-free outcome of this slot, used for the unnecessary-jam audit.
        const auto clean_features = rssi_features(s.sensing_at_t(false), w.n_bins);
        const Prediction clean_pred = predict(ct, clean_features);
        out.ct_predictions.push_back(clean_pred);
        const CtDecision clean_decision = clean_pred.label == ct_busy_label ? CtDecision::Busy : CtDecision::Idle;
        const bool withheld = !opt.withheld.empty() && opt.withheld[t];
        const bool clean_tx = clean_decision == CtDecision::Idle && !withheld;
        const bool clean_ack = clean_tx && s.data_success(false);

        std::vector<double> a_feat;
        if (need_features) a_feat = detail::adversary_features(w, s, clean_tx);
        if (opt.surrogate) {
            rec.adversary_prediction = predict(*opt.surrogate, a_feat).label == ca_ack_label ? AckPrediction::Ack : AckPrediction::NoAck;
        }

        const bool wants_jam = opt.mode != AttackMode::None && rec.adversary_prediction == AckPrediction::Ack;
        if (wants_jam && opt.mode == AttackMode::JamSensing && opt.budget.can_spend(jam_sense_cost)) {
            opt.budget.spend(jam_sense_cost);
            rec.jam_action = JamAction::JamSensing;
        }
        rec.ct_decision = rec.jam_action == JamAction::JamSensing
                              ? detail::decide(ct, rssi_features(s.sensing_at_t(true), w.n_bins))
                              : clean_decision;
        rec.transmitted = rec.ct_decision == CtDecision::Idle && !withheld;
        if (wants_jam && opt.mode == AttackMode::JamData && opt.budget.can_spend(jam_data_cost)) {
            opt.budget.spend(jam_data_cost);
            rec.jam_action = JamAction::JamData;
        }
        rec.ack = rec.transmitted && s.data_success(rec.jam_action == JamAction::JamData);

        if (opt.collect_adversary_data) {
            const bool seen_ack = rec.ack && !ack_rng.child(t).bernoulli(w.ack_miss_prob);
            for (std::size_t j = 0; j < a_feat.size(); ++j)
                out.adversary_data.features(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = a_feat[j];
            out.adversary_data.labels[t] = seen_ack ? ca_ack_label : ca_no_ack_label;
        }

        busy[t] ? ++m.busy_slots : ++m.idle_slots;
        if (busy[t] && rec.ct_decision == CtDecision::Idle) ++m.busy_missed;
        if (!busy[t] && rec.ct_decision == CtDecision::Idle) ++m.idle_detected;
        m.transmissions += rec.transmitted;
        m.successes += rec.ack;
        if (rec.jam_action != JamAction::None) {
            ++m.jam_actions;
            m.unnecessary_jams += !clean_ack;
        }
    }
    m.energy_spent = opt.budget.spent_units;
    return out;
}

inline Scenario1Run run_baseline(const Scenario1World& w, const Mlp<float>& ct, std::size_t n_slots, RandomStream& rng) {
    return run_slots(w, ct, n_slots, rng);
}

/// n baseline slots observed by A: features at A's position, labels = ACK seen on air.
inline LabeledDataset build_adversary_dataset(const Scenario1World& w, const Mlp<float>& ct, std::size_t n_samples,
                                              RandomStream& rng, std::vector<bool> withheld = {}) {
    require(n_samples >= 2, Errc::invalid_config, "n_samples must be >= 2");
    SlotLoopOptions opt;
    opt.collect_adversary_data = true;
    opt.withheld = std::move(withheld);
    return run_slots(w, ct, n_samples, rng, std::move(opt)).adversary_data;
}

struct SurrogateReport {
    double ack_detection = 0.0;  // P(predict Ack | Ack) on the test half
    double no_ack_error = 0.0;   // P(predict Ack | no Ack) on the test half
    double test_accuracy = 0.0;
};

struct Surrogate {
    Mlp<float> model;
    SurrogateReport report;
};

inline SurrogateReport evaluate_surrogate(const Mlp<float>& m, const LabeledDataset& test) {
    const auto p = predict_batch(m, test.features);
    std::size_t ack = 0, ack_hit = 0, nack = 0, nack_err = 0, ok = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool is_ack = test.labels[i] == ca_ack_label;
        const bool said_ack = p[i].label == ca_ack_label;
        ok += is_ack == said_ack;
        if (is_ack) {
            ++ack;
            ack_hit += said_ack;
        } else {
            ++nack;
            nack_err += said_ack;
        }
    }
    SurrogateReport r;
    r.ack_detection = ack ? double(ack_hit) / double(ack) : 0.0;
    r.no_ack_error = nack ? double(nack_err) / double(nack) : 0.0;
    r.test_accuracy = p.empty() ? 0.0 : double(ok) / double(p.size());
    return r;
}

/// C_A trained on the first half of the adversary's observations.
inline Surrogate train_surrogate(const LabeledDataset& data, const TrainConfig& cfg, RandomStream& rng) {
    auto [train, test] = data.split_half();
    auto init = mlp_init<float>(MlpSpec::classifier(data.dim()), rng, ModelRole::CA);
    TrainConfig balanced = cfg;
    balanced.balance_classes = true;  // no-ACK slots are the minority
    Surrogate s{train_classifier(std::move(init), train, balanced).model, {}};
    s.report = evaluate_surrogate(s.model, test);
    return s;
}

/// C_T trained on the first half of the defender's dataset.
struct SensingModel {
    Mlp<float> model;
    double idle_detection = 0.0;  // on the test half
    double busy_error = 0.0;
};

inline SensingModel train_sensing_classifier(const LabeledDataset& data, const TrainConfig& cfg, RandomStream& rng) {
    auto [train, test] = data.split_half();
    auto init = mlp_init<float>(MlpSpec::classifier(data.dim()), rng, ModelRole::CT);
    SensingModel s{train_classifier(std::move(init), train, cfg).model, 0.0, 0.0};
    const auto p = predict_batch(s.model, test.features);
    std::size_t idle = 0, idle_ok = 0, busy = 0, busy_err = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (test.labels[i] == ct_idle_label) {
            ++idle;
            idle_ok += p[i].label == ct_idle_label;
        } else {
            ++busy;
            busy_err += p[i].label == ct_idle_label;
        }
    }
    s.idle_detection = idle ? double(idle_ok) / double(idle) : 0.0;
    s.busy_error = busy ? double(busy_err) / double(busy) : 0.0;
    return s;
}

inline Scenario1Run run_attack(const Scenario1World& w, const Mlp<float>& ct, const Mlp<float>& ca, AttackMode mode,
                               EnergyBudget budget, std::size_t n_slots, RandomStream& rng) {
    SlotLoopOptions opt;
    opt.mode = mode;
    opt.surrogate = &ca;
    opt.budget = budget;
    return run_slots(w, ct, n_slots, rng, std::move(opt));
}

/// (baseline successes - attacked successes) / baseline successes.
inline double throughput_reduction(const Scenario1Metrics& baseline, const Scenario1Metrics& attacked) {
    if (baseline.successes == 0) throw Error(Errc::zero_baseline, "baseline has zero successes");
    return (static_cast<double>(baseline.successes) - static_cast<double>(attacked.successes)) /
           static_cast<double>(baseline.successes);
}

inline void write_trace_csv(std::ostream& os, const SlotTrace& trace) {
    os << "slot,truth_busy,ct_decision,transmitted,jam_action,ack,adversary_prediction\n";
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const auto& r = trace[t];
        os << t << ',' << int(r.truth_busy) << ',' << to_string(r.ct_decision) << ',' << int(r.transmitted) << ','
           << to_string(r.jam_action) << ',' << int(r.ack) << ',' << to_string(r.adversary_prediction) << '\n';
    }
}

}  // namespace aml5g
