// Trains the defender's sensing classifier and the adversary's surrogate for
// one seed, then compares data-phase and sensing-phase jamming under the same
// energy budget.

#include <aml5g/scenario1.hpp>

#include <cstdio>
#include <cstdlib>

using namespace aml5g;

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
    const Scenario1World world;
    const RandomStream root(seed);

    RandomStream data_rng = root.child("defender_data"), ct_rng = root.child("ct_init");
    const auto ct = train_sensing_classifier(build_defender_dataset(world, 1000, data_rng), TrainConfig{}, ct_rng);
    std::printf("C_T: idle detection %.3f, busy error %.3f\n", ct.idle_detection, ct.busy_error);

    RandomStream obs_rng = root.child("observation"), ca_rng = root.child("ca_init");
    const auto ca = train_surrogate(build_adversary_dataset(world, ct.model, 1000, obs_rng), TrainConfig{}, ca_rng);
    std::printf("C_A: ACK detection %.3f, no-ACK error %.3f\n", ca.report.ack_detection, ca.report.no_ack_error);

    const std::size_t n_slots = 2000;
    const EnergyBudget budget{0.2 * n_slots * world.timing.data_units, 0.0};
    const RandomStream op = root.child("operation");
    RandomStream r0 = op, r1 = op, r2 = op;
    const auto base = run_baseline(world, ct.model, n_slots, r0);
    const auto jd = run_attack(world, ct.model, ca.model, AttackMode::JamData, budget, n_slots, r1);
    const auto js = run_attack(world, ct.model, ca.model, AttackMode::JamSensing, budget, n_slots, r2);
    std::printf("baseline throughput %.3f\n", base.metrics.normalized_throughput());
    std::printf("JamData    reduction %.3f, energy %.0f\n", throughput_reduction(base.metrics, jd.metrics),
                jd.metrics.energy_spent);
    std::printf("JamSensing reduction %.3f, energy %.0f\n", throughput_reduction(base.metrics, js.metrics),
                js.metrics.energy_spent);
}
