#pragma once

// Proactive defense: the defender flips a small share of its most confident
// favourable decisions so that the adversary learns from poisoned labels.

#include <aml5g/scenario1.hpp>
#include <aml5g/scenario2.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

namespace aml5g {

enum class DefenseSelection { TopConfidence };
enum class DefenseScope { AuthDecisions, TransmitDecisions };

inline std::string_view to_string(DefenseScope s) {
    return s == DefenseScope::AuthDecisions ? "AuthDecisions" : "TransmitDecisions";
}

struct DefensePolicy {
    double p_d = 0.0;
    DefenseSelection selection = DefenseSelection::TopConfidence;
    DefenseScope scope = DefenseScope::AuthDecisions;
    bool all_time = false;  // keep flipping after the adversary's observation window

    void validate() const {
        if (!(p_d >= 0.0 && p_d <= 1.0)) throw ValidationError("p_d", "must be in [0, 1]");
    }

    /// The only label the policy may flip: Intended for authentication,
    /// Idle (transmit) for sensing.
    int flippable_label() const { return scope == DefenseScope::AuthDecisions ? auth_intended_label : ct_idle_label; }
};

struct DefenseOutcome {
    std::vector<Prediction> decisions;
    std::vector<std::size_t> flipped;  // ascending indices
};

/// Flips the ceil(p_d * N) most confident decisions of the flippable class,
/// N being that class's count. Ranking: confidence, then margin, then the
/// lower index first.
inline DefenseOutcome apply_defense(std::span<const Prediction> decisions, const DefensePolicy& policy) {
    policy.validate();
    const int target = policy.flippable_label();
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const auto& d = decisions[i];
        if (!(d.confidence >= 0.5 && d.confidence <= 1.0))
            throw ValidationError("confidence", "decision " + std::to_string(i) + " has confidence outside [0.5, 1]");
        if (d.label == target) pool.push_back(i);
    }
    const auto k = static_cast<std::size_t>(std::ceil(policy.p_d * static_cast<double>(pool.size()) - 1e-12));
    std::stable_sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = decisions[a];
        const auto& y = decisions[b];
        if (x.confidence != y.confidence) return x.confidence > y.confidence;
        return x.margin > y.margin;
    });
    DefenseOutcome out;
    out.decisions.assign(decisions.begin(), decisions.end());
    out.flipped.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(k, pool.size())));
    std::sort(out.flipped.begin(), out.flipped.end());
    for (std::size_t i : out.flipped) out.decisions[i].label = 1 - target;
    return out;
}

/// Decisions that changed although they were outside the flippable class.
inline std::size_t out_of_scope_flips(std::span<const Prediction> before, std::span<const Prediction> after,
                                      const DefensePolicy& policy) {
    require(before.size() == after.size(), Errc::length_mismatch, "audit needs equal-length decision lists");
    std::size_t n = 0;
    for (std::size_t i = 0; i < before.size(); ++i)
        n += before[i].label != policy.flippable_label() && before[i].label != after[i].label;
    return n;
}

struct Defense2Row {
    double p_d = 0.0;
    double success_probability = 0.0;
    std::size_t n_flipped = 0;
    std::size_t out_of_scope = 0;
    std::size_t n_trials = 0;
};

/// One seed of the spoofing defense table: shared C_S and observations, one
/// GAN per p_d trained on the defended labels.
inline std::vector<Defense2Row> evaluate_defense_scenario2(std::span<const double> pd_values, const Scenario2Setup& s,
                                                           const AuthConfig& cfg, const AuthWorld& w,
                                                           const TrainConfig& gan_cfg, std::size_t n_trials,
                                                           const RandomStream& root) {
    std::vector<Defense2Row> rows;
    for (double pd : pd_values) {
        DefensePolicy policy{pd, DefenseSelection::TopConfidence, DefenseScope::AuthDecisions, false};
        const auto out = apply_defense(s.observations.decisions, policy);
        std::vector<int> labels;
        for (const auto& d : out.decisions) labels.push_back(d.label);
        const auto res = spoof_with_labels(s, labels, cfg, w, gan_cfg, n_trials, root);
        rows.push_back({pd, res.gan.success_probability, out.flipped.size(),
                        out_of_scope_flips(s.observations.decisions, out.decisions, policy), res.gan.n_trials});
    }
    return rows;
}

struct Defense1Row {
    double p_d = 0.0;
    double surrogate_no_ack_error = 0.0;
    double surrogate_ack_detection = 0.0;
    double attack_throughput_reduction = 0.0;
    double defender_throughput_cost = 0.0;
    std::size_t n_flipped = 0;
    std::size_t out_of_scope = 0;
};

/// One seed of the sensing defense: the defender withholds its most confident
/// transmit decisions while the adversary collects its training data; the
/// poisoned surrogate then drives a JamData attack.
inline std::vector<Defense1Row> evaluate_defense_scenario1(std::span<const double> pd_values, const Scenario1World& w,
                                                           const Mlp<float>& ct, std::size_t n_observation_slots,
                                                           std::size_t n_attack_slots, const EnergyBudget& budget,
                                                           const TrainConfig& ca_cfg, const RandomStream& root,
                                                           bool all_time = false) {
    std::vector<Defense1Row> rows;
    RandomStream obs_rng = root.child("observation");
    RandomStream probe = obs_rng;
    const auto clean = run_baseline(w, ct, n_observation_slots, probe);
    RandomStream attack_rng = root.child("attack");
    RandomStream attack_probe = attack_rng;
    const auto attack_clean = run_baseline(w, ct, n_attack_slots, attack_probe);

    for (double pd : pd_values) {
        DefensePolicy policy{pd, DefenseSelection::TopConfidence, DefenseScope::TransmitDecisions, all_time};
        const auto out = apply_defense(clean.ct_predictions, policy);
        std::vector<bool> withheld(n_observation_slots, false);
        for (std::size_t i : out.flipped) withheld[i] = true;

        SlotLoopOptions collect;
        collect.collect_adversary_data = true;
        collect.withheld = withheld;
        RandomStream r = obs_rng;
        const auto observed = run_slots(w, ct, n_observation_slots, r, collect);
        RandomStream ca_rng = root.child("surrogate");
        const auto ca = train_surrogate(observed.adversary_data, ca_cfg, ca_rng);

        Defense1Row row;
        row.p_d = pd;
        row.surrogate_no_ack_error = ca.report.no_ack_error;
        row.surrogate_ack_detection = ca.report.ack_detection;
        row.n_flipped = out.flipped.size();
        row.out_of_scope = out_of_scope_flips(clean.ct_predictions, out.decisions, policy);
        row.defender_throughput_cost =
            clean.metrics.successes ? 1.0 - double(observed.metrics.successes) / double(clean.metrics.successes) : 0.0;

        SlotLoopOptions attack;
        attack.mode = AttackMode::JamData;
        attack.surrogate = &ca.model;
        attack.budget = budget;
        std::vector<bool> attack_withheld;
        if (policy.all_time) {
            const auto later = apply_defense(attack_clean.ct_predictions, policy);
            attack_withheld.assign(n_attack_slots, false);
            for (std::size_t i : later.flipped) attack_withheld[i] = true;
            attack.withheld = attack_withheld;
        }
        RandomStream ra = attack_rng;
        const auto attacked = run_slots(w, ct, n_attack_slots, ra, attack);
        SlotLoopOptions base_opt;
        base_opt.withheld = attack_withheld;
        RandomStream rb = attack_rng;
        const auto base = run_slots(w, ct, n_attack_slots, rb, base_opt);
        row.attack_throughput_reduction = base.metrics.successes ? throughput_reduction(base.metrics, attacked.metrics) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

inline void write_defense2_table(std::ostream& os, std::span<const Defense2Row> rows) {
    os << "p_d,attack_success_probability\n";
    for (const auto& r : rows) os << r.p_d << ',' << r.success_probability << '\n';
}

}  // namespace aml5g
