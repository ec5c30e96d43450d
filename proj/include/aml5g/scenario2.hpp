#pragma once

// Physical-layer authentication at the gNodeB and the adversary pair's
// over-the-air GAN spoofing attack.

#include <aml5g/gan.hpp>
#include <aml5g/neural.hpp>
#include <aml5g/signal.hpp>

#include <cmath>
#include <limits>
#include <span>
#include <ostream>
#include <vector>

namespace aml5g {

/// Class index of the intended UE in C_S's output.
inline constexpr int auth_intended_label = 1;
inline constexpr int auth_other_label = 0;

struct AuthConfig {
    double gamma_db = -3.0;  // minimum UE SNR at the gNodeB; +inf means noiseless
    int n_samples = 1000;
    int feature_len = 400;

    std::size_t n_complex() const { return static_cast<std::size_t>(feature_len / 2); }

    void validate() const {
        if (std::isnan(gamma_db) || gamma_db == -std::numeric_limits<double>::infinity())
            throw ValidationError("gamma_db", "must be a number or +inf");
        if (n_samples < 2 || n_samples % 2 != 0) throw ValidationError("n_samples", "must be even and >= 2");
        if (feature_len != 400) throw ValidationError("feature_len", "must be 400");
    }
};

/// Radio environment shared by the UE, the gNodeB and the adversary pair.
struct AuthWorld {
    OfdmConfig ofdm;
    TdlProfile ue_channel = TdlProfile::exponential();
    // Short adversary links: one Rayleigh tap.
    TdlProfile adversary_channel = [] {
        auto p = TdlProfile::identity();
        p.rayleigh = true;
        return p;
    }();
    double power_spread_db = 6.0;       // per-frame received power above the minimum
    double observer_correlation = 1.0;  // A_R channels vs gNodeB channels (1 = co-located)
    double spoof_offset_db = -8.0;      // adversary received power relative to the minimum UE power
    double observer_offset_db = 0.0;    // A_R's received power relative to the gNodeB's, for every source
    std::uint64_t reference_seed = 0x5EEDu;

    void validate() const {
        ofdm.validate();
        ue_channel.validate();
        adversary_channel.validate();
        if (!(power_spread_db >= 0) || !std::isfinite(power_spread_db))
            throw ValidationError("power_spread_db", "must be finite and >= 0");
        if (!(observer_correlation >= 0 && observer_correlation <= 1))
            throw ValidationError("observer_correlation", "must be in [0, 1]");
        if (!std::isfinite(spoof_offset_db)) throw ValidationError("spoof_offset_db", "must be finite");
        if (!std::isfinite(observer_offset_db)) throw ValidationError("observer_offset_db", "must be finite");
    }
};

/// Quasi-static channel realizations for one run, each with unit power gain.
struct AuthLinks {
    ChannelTaps ue_to_gnb;
    ChannelTaps ue_to_observer;
    ChannelTaps adversary_to_gnb;
    ChannelTaps adversary_to_observer;

    static AuthLinks draw(const AuthWorld& w, RandomStream& rng) {
        const double fs = w.ofdm.sample_rate_hz();
        AuthLinks l;
        l.ue_to_gnb = draw_tdl_taps(w.ue_channel, fs, rng).normalize();
        const auto ue_private = draw_tdl_taps(w.ue_channel, fs, rng);
        l.ue_to_observer = correlate_taps(l.ue_to_gnb, ue_private, w.observer_correlation).normalize();
        l.adversary_to_gnb = draw_tdl_taps(w.adversary_channel, fs, rng).normalize();
        const auto adv_private = draw_tdl_taps(w.adversary_channel, fs, rng);
        l.adversary_to_observer = correlate_taps(l.adversary_to_gnb, adv_private, w.observer_correlation).normalize();
        return l;
    }
};

/// Reference symbol (fixed per UE) followed by one random data symbol.
inline IqFrame ue_frame(const AuthWorld& w, RandomStream& rng) {
    const std::size_t nb = w.ofdm.bits_per_ofdm_symbol();
    std::vector<std::uint8_t> bits(2 * nb);
    RandomStream ref(w.reference_seed);
    for (std::size_t i = 0; i < nb; ++i) bits[i] = ref.bernoulli(0.5);
    for (std::size_t i = nb; i < 2 * nb; ++i) bits[i] = rng.bernoulli(0.5);
    IqFrame f = gen_ofdm_frame(w.ofdm, bits);
    f.origin = Origin::UeSignal;
    return f;
}

/// Channel, scaling to `snr_db` over unit-variance noise, then the noise.
/// snr_db = +inf passes the channel output through without noise.
inline IqFrame receive(const IqFrame& frame, const ChannelTaps& taps, double snr_db, RandomStream& rng) {
    IqFrame out = apply_taps(frame, taps);
    if (std::isinf(snr_db)) return out;
    out.scale(std::sqrt(db_to_lin(snr_db)));
    return add_noise(out, 1.0, rng);
}

namespace detail {

inline void set_row(MatrixXd& m, Eigen::Index r, const std::vector<double>& v) {
    for (std::size_t j = 0; j < v.size(); ++j) m(r, static_cast<Eigen::Index>(j)) = v[j];
}

inline std::vector<double> get_row(const MatrixXd& m, Eigen::Index r) {
    std::vector<double> v(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) v[static_cast<std::size_t>(j)] = m(r, j);
    return v;
}

inline double draw_snr(double base_db, double spread_db, RandomStream& rng) {
    return std::isinf(base_db) ? base_db : base_db + spread_db * rng.uniform();
}

}  // namespace detail

/// Positive rows: UE frames at the gNodeB. Negative rows: complex Gaussian
/// noise at the UE class's mean received power plus the noise floor.
/// Labels alternate, starting with the negative class.
inline LabeledDataset build_auth_dataset(const AuthConfig& cfg, const AuthWorld& w, const AuthLinks& links,
                                         RandomStream& rng) {
    cfg.validate();
    w.validate();
    const double fs = w.ofdm.sample_rate_hz();
    const std::size_t nc = cfg.n_complex();
    double noise_power = 1.0;
    if (std::isfinite(cfg.gamma_db)) {
        const double lo = db_to_lin(cfg.gamma_db), spread = w.power_spread_db;
        const double mean_snr = spread > 0 ? lo * (db_to_lin(spread) - 1.0) / (spread * std::log(10.0) / 10.0) : lo;
        noise_power += mean_snr;
    }
    LabeledDataset d;
    d.semantics = LabelSemantics::IntendedOther;
    d.features.resize(cfg.n_samples, cfg.feature_len);
    d.labels.resize(static_cast<std::size_t>(cfg.n_samples));
    for (int i = 0; i < cfg.n_samples; ++i) {
        RandomStream r = rng.child(static_cast<std::uint64_t>(i));
        const int label = i % 2 == 0 ? auth_other_label : auth_intended_label;
        IqFrame rx;
        if (label == auth_intended_label) {
            rx = receive(ue_frame(w, r), links.ue_to_gnb, detail::draw_snr(cfg.gamma_db, w.power_spread_db, r), r);
        } else {
            rx = noise_frame(nc, fs, noise_power, r);
            rx.origin = Origin::Noise;
        }
        detail::set_row(d.features, i, iq_features(rx, nc));
        d.labels[static_cast<std::size_t>(i)] = label;
    }
    return d;
}

struct AuthModel {
    Mlp<float> model;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

/// C_S trained on the first half, scored on the second.
inline AuthModel train_auth_classifier(const LabeledDataset& data, const TrainConfig& cfg, RandomStream& rng) {
    auto [train, test] = data.split_half();
    auto init = mlp_init<float>(MlpSpec::classifier(static_cast<int>(data.dim())), rng, ModelRole::CS);
    auto res = train_classifier(std::move(init), train, cfg);
    AuthModel m{std::move(res.model), res.train_accuracy, 0.0};
    m.test_accuracy = accuracy(m.model, test);
    return m;
}

/// What the adversary pair sees while eavesdropping on the UE.
struct AdversaryObservations {
    MatrixXd at_observer;              // rows as received at A_R (the GAN's real rows)
    MatrixXd at_gnb;                   // the same transmissions as received at the gNodeB
    std::vector<Prediction> decisions;  // the gNodeB's authentication outcomes

    std::size_t size() const { return decisions.size(); }
};

/// n UE transmissions, each received at both A_R and the gNodeB with the same
/// transmit power draw, plus C_S's decision on the gNodeB copy.
inline AdversaryObservations collect_adversary_observations(const AuthConfig& cfg, const AuthWorld& w,
                                                            const AuthLinks& links, const Mlp<float>& cs,
                                                            std::size_t n, RandomStream& rng) {
    require(n >= 2, Errc::invalid_config, "adversary needs at least 2 observations");
    const std::size_t nc = cfg.n_complex();
    AdversaryObservations o;
    o.at_observer.resize(static_cast<Eigen::Index>(n), cfg.feature_len);
    o.at_gnb.resize(static_cast<Eigen::Index>(n), cfg.feature_len);
    for (std::size_t i = 0; i < n; ++i) {
        RandomStream r = rng.child(i);
        const IqFrame tx = ue_frame(w, r);
        const double snr = detail::draw_snr(cfg.gamma_db, w.power_spread_db, r);
        detail::set_row(o.at_gnb, static_cast<Eigen::Index>(i), iq_features(receive(tx, links.ue_to_gnb, snr, r), nc));
        detail::set_row(o.at_observer, static_cast<Eigen::Index>(i),
                        iq_features(receive(tx, links.ue_to_observer, snr + w.observer_offset_db, r), nc));
    }
    o.decisions = predict_batch(cs, o.at_gnb);
    return o;
}

/// Splits A_R's rows by the (possibly flipped) authentication labels.
inline std::pair<MatrixXd, MatrixXd> split_by_decision(const AdversaryObservations& o, std::span<const int> labels) {
    require(labels.size() == o.size(), Errc::length_mismatch, "one label per observation");
    std::vector<Eigen::Index> acc, den;
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] == auth_intended_label ? acc : den).push_back(static_cast<Eigen::Index>(i));
    MatrixXd a(static_cast<Eigen::Index>(acc.size()), o.at_observer.cols());
    MatrixXd d(static_cast<Eigen::Index>(den.size()), o.at_observer.cols());
    for (std::size_t i = 0; i < acc.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = o.at_observer.row(acc[i]);
    for (std::size_t i = 0; i < den.size(); ++i) d.row(static_cast<Eigen::Index>(i)) = o.at_observer.row(den[i]);
    return {a, d};
}

/// The A_T -> A_R link the GAN trains through (A_T's flag marks its own frames).
inline OtaLink adversary_ota_link(const AuthConfig& cfg, const AuthWorld& w, const AuthLinks& links) {
    const double snr = std::isinf(cfg.gamma_db) ? 60.0 : cfg.gamma_db + w.spoof_offset_db + w.observer_offset_db;
    return OtaLink{links.adversary_to_observer, snr, w.power_spread_db};
}

/// GAN on accepted observations; denied observations join the discriminator's
/// fake half.
inline GanResult<float> train_spoof_gan(const MatrixXd& accepted, const MatrixXd& denied, const AuthConfig& cfg,
                                        const AuthWorld& w, const AuthLinks& links, const TrainConfig& tc,
                                        RandomStream& rng) {
    GanOptions opts;
    opts.air = adversary_ota_link(cfg, w, links);
    auto pair = GanPair<float>::init(rng, cfg.feature_len);
    return train_gan(std::move(pair), accepted, tc, rng, denied.rows() > 0 ? &denied : nullptr, opts);
}

struct SpoofResult {
    std::size_t n_trials = 0;
    std::size_t n_accepted = 0;
    double success_probability = 0.0;
};

/// Sends each unit-power row from A_T to the gNodeB and counts C_S acceptances.
inline SpoofResult transmit_to_gnb(const MatrixXd& rows, const Mlp<float>& cs, const AuthConfig& cfg,
                                   const AuthWorld& w, const AuthLinks& links, RandomStream& rng) {
    SpoofResult res;
    res.n_trials = static_cast<std::size_t>(rows.rows());
    if (res.n_trials == 0) return res;
    const double fs = w.ofdm.sample_rate_hz();
    const double base = std::isinf(cfg.gamma_db) ? cfg.gamma_db : cfg.gamma_db + w.spoof_offset_db;
    MatrixXd seen(rows.rows(), rows.cols());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        RandomStream r = rng.child(static_cast<std::uint64_t>(i));
        const auto v = detail::get_row(rows, i);
        IqFrame tx = frame_from_iq(v, fs, Origin::Spoof);
        detail::set_row(seen, i,
                        iq_features(receive(tx, links.adversary_to_gnb, detail::draw_snr(base, w.power_spread_db, r), r),
                                    cfg.n_complex()));
    }
    for (const auto& p : predict_batch(cs, seen)) res.n_accepted += p.label == auth_intended_label;
    res.success_probability = static_cast<double>(res.n_accepted) / static_cast<double>(res.n_trials);
    return res;
}

inline SpoofResult run_spoofing_attack(const Mlp<float>& cs, const Mlp<float>& generator, const AuthConfig& cfg,
                                       const AuthWorld& w, const AuthLinks& links, std::size_t n_trials,
                                       RandomStream& rng) {
    RandomStream gen_rng = rng.child("generate");
    RandomStream air_rng = rng.child("air");
    return transmit_to_gnb(generate_spoof(generator, gen_rng, n_trials), cs, cfg, w, links, air_rng);
}

/// Amplify-and-forward of A_R's own received copies (cycled when n_trials
/// exceeds the number of observations).
inline SpoofResult replay_attack_baseline(const Mlp<float>& cs, const MatrixXd& observed, const AuthConfig& cfg,
                                          const AuthWorld& w, const AuthLinks& links, std::size_t n_trials,
                                          RandomStream& rng) {
    require(observed.rows() > 0, Errc::empty_input, "replay needs observed rows");
    MatrixXd rows(static_cast<Eigen::Index>(n_trials), observed.cols());
    for (std::size_t i = 0; i < n_trials; ++i) {
        rows.row(static_cast<Eigen::Index>(i)) = observed.row(static_cast<Eigen::Index>(i) % observed.rows());
        normalize_iq_row(rows.row(static_cast<Eigen::Index>(i)));
    }
    RandomStream air_rng = rng.child("air");
    return transmit_to_gnb(rows, cs, cfg, w, links, air_rng);
}

/// Everything that precedes the GAN for one seed: channels, C_S and the
/// adversary's eavesdropped observations.
struct Scenario2Setup {
    AuthLinks links;
    AuthModel cs;
    AdversaryObservations observations;
};

inline Scenario2Setup prepare_scenario2(const AuthConfig& cfg, const AuthWorld& w, const TrainConfig& cs_cfg,
                                        std::size_t n_observations, const RandomStream& root) {
    Scenario2Setup s;
    RandomStream link_rng = root.child("links");
    s.links = AuthLinks::draw(w, link_rng);
    RandomStream data_rng = root.child("auth_data");
    const auto data = build_auth_dataset(cfg, w, s.links, data_rng);
    RandomStream init_rng = root.child("cs_init");
    s.cs = train_auth_classifier(data, cs_cfg, init_rng);
    RandomStream obs_rng = root.child("observations");
    s.observations = collect_adversary_observations(cfg, w, s.links, s.cs.model, n_observations, obs_rng);
    return s;
}

inline std::vector<int> decision_labels(const AdversaryObservations& o) {
    std::vector<int> labels;
    labels.reserve(o.size());
    for (const auto& d : o.decisions) labels.push_back(d.label);
    return labels;
}

struct SpoofOutcome {
    SpoofResult gan;
    double final_discriminator_accuracy = 0.0;  // mean over the last 100 steps
    bool mode_collapse_warning = false;
    std::size_t n_real_rows = 0;
    std::size_t n_denied_rows = 0;
};

/// GAN trained on the observations as labeled by `labels`, then the attack.
/// Uses the same streams for every labeling, so only the labels differ.
inline SpoofOutcome spoof_with_labels(const Scenario2Setup& s, std::span<const int> labels, const AuthConfig& cfg,
                                      const AuthWorld& w, const TrainConfig& gan_cfg, std::size_t n_trials,
                                      const RandomStream& root) {
    auto [accepted, denied] = split_by_decision(s.observations, labels);
    RandomStream gan_rng = root.child("gan");
    const auto g = train_spoof_gan(accepted, denied, cfg, w, s.links, gan_cfg, gan_rng);
    RandomStream spoof_rng = root.child("spoof");
    SpoofOutcome out;
    out.gan = run_spoofing_attack(s.cs.model, g.pair.generator, cfg, w, s.links, n_trials, spoof_rng);
    const auto& acc = g.discriminator_accuracy;
    const std::size_t tail = std::min<std::size_t>(100, acc.size());
    for (std::size_t i = acc.size() - tail; i < acc.size(); ++i) out.final_discriminator_accuracy += acc[i] / double(tail);
    out.mode_collapse_warning = g.mode_collapse_warning;
    out.n_real_rows = static_cast<std::size_t>(accepted.rows());
    out.n_denied_rows = static_cast<std::size_t>(denied.rows());
    return out;
}

/// Untrained generator through the same attack path.
inline SpoofResult untrained_spoof(const Scenario2Setup& s, const AuthConfig& cfg, const AuthWorld& w,
                                   std::size_t n_trials, const RandomStream& root) {
    RandomStream gan_rng = root.child("gan");
    const auto pair = GanPair<float>::init(gan_rng, cfg.feature_len);
    RandomStream spoof_rng = root.child("spoof");
    return run_spoofing_attack(s.cs.model, pair.generator, cfg, w, s.links, n_trials, spoof_rng);
}

inline SpoofResult replay_spoof(const Scenario2Setup& s, const AuthConfig& cfg, const AuthWorld& w,
                                std::size_t n_trials, const RandomStream& root) {
    RandomStream rng = root.child("replay");
    return replay_attack_baseline(s.cs.model, s.observations.at_observer, cfg, w, s.links, n_trials, rng);
}

struct SpoofTableRow {
    double gamma_db = 0.0;
    std::size_t n_trials = 0;
    double success_probability = 0.0;
};

inline void write_spoof_table(std::ostream& os, std::span<const SpoofTableRow> rows) {
    os << "gamma_db,n_trials,success_probability\n";
    for (const auto& r : rows) os << r.gamma_db << ',' << r.n_trials << ',' << r.success_probability << '\n';
}

}  // namespace aml5g
