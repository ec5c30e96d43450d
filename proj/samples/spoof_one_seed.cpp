// One spoofing run at a chosen SNR: C_S, the adversary's observations, the
// over-the-air GAN, and the replay baseline for comparison.

#include <aml5g/aml5g.hpp>

#include <cstdio>
#include <cstdlib>

using namespace aml5g;

int main(int argc, char** argv) {
    AuthConfig cfg;
    cfg.gamma_db = argc > 1 ? std::atof(argv[1]) : 3.0;
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1;
    const AuthWorld world;
    const RandomStream root(seed);

    const auto setup = prepare_scenario2(cfg, world, TrainConfig{}, 1000, root);
    std::printf("C_S test accuracy %.3f\n", setup.cs.test_accuracy);

    const auto out = spoof_with_labels(setup, decision_labels(setup.observations), cfg, world,
                                       TrainConfig::gan_defaults(), 500, root);
    const auto replay = replay_spoof(setup, cfg, world, 500, root);
    std::printf("gamma %.1f dB: GAN success %.3f, replay success %.3f (%zu real rows)\n", cfg.gamma_db,
                out.gan.success_probability, replay.success_probability, out.n_real_rows);
}
