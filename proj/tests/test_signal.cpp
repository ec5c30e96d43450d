#include <aml5g/signal.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace aml5g;

namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, RandomStream& rng) {
    std::vector<std::uint8_t> b(n);
    for (auto& x : b) x = rng.bernoulli(0.5);
    return b;
}

IqFrame frame_of(std::vector<cplx> s, double fs = 1.0) {
    IqFrame f;
    f.samples = std::move(s);
    f.sample_rate_hz = fs;
    return f;
}

// Runs of consecutive nonzero samples.
std::vector<std::size_t> nonzero_runs(const IqFrame& f) {
    std::vector<std::size_t> runs;
    std::size_t cur = 0;
    for (const auto& s : f.samples) {
        if (std::abs(s) > 0) {
            ++cur;
        } else if (cur) {
            runs.push_back(cur);
            cur = 0;
        }
    }
    if (cur) runs.push_back(cur);
    return runs;
}

}  // namespace

TEST(Radar, PulseCountFollowsWidthPriAndRate) {
    RadarConfig cfg{1e-5, 1e-4, 1.0, 0.0};
    RandomStream rng(1);
    const std::size_t n = 10000;
    const double fs = 1e6;
    const auto f = gen_radar_pulse(cfg, n, fs, rng);
    ASSERT_EQ(f.size(), n);
    EXPECT_EQ(f.origin, Origin::Radar);
    // Oracle: window length / PRI pulses, each width * fs samples long.
    const auto expected_pulses = static_cast<std::size_t>(std::floor(n / fs / cfg.pulse_repetition_interval_s));
    const auto expected_width = static_cast<std::size_t>(std::llround(cfg.pulse_width_s * fs));
    const auto runs = nonzero_runs(f);
    EXPECT_EQ(runs.size(), expected_pulses);
    for (auto r : runs) EXPECT_EQ(r, expected_width);
    for (const auto& s : f.samples)
        if (std::abs(s) > 0) EXPECT_NEAR(std::norm(s), 1.0, 1e-12);
}

TEST(Radar, ZeroPowerGivesZeroFrame) {
    RadarConfig cfg{1e-5, 1e-4, 0.0, 0.0};
    RandomStream rng(2);
    const auto f = gen_radar_pulse(cfg, 1000, 1e6, rng);
    EXPECT_EQ(f.power(), 0.0);
}

TEST(Radar, WidthEqualToPriRejected) {
    RadarConfig cfg{1e-4, 1e-4, 1.0, 0.0};
    RandomStream rng(3);
    try {
        gen_radar_pulse(cfg, 100, 1e6, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::invalid_config);
    }
}

TEST(Ofdm, OneSymbolForExactBitBudget) {
    OfdmConfig cfg;
    ASSERT_EQ(cfg.n_active(), 624);
    RandomStream rng(4);
    const auto bits = random_bits(624 * 4, rng);
    const auto f = gen_ofdm_frame(cfg, bits);
    EXPECT_EQ(f.size(), static_cast<std::size_t>(cfg.fft_size + cfg.cp_len));
    EXPECT_EQ(f.origin, Origin::UeSignal);
    EXPECT_EQ(ofdm_padding_bits(cfg, bits.size()), 0u);
}

TEST(Ofdm, EmptyPayloadGivesEmptyFrame) {
    OfdmConfig cfg;
    const auto f = gen_ofdm_frame(cfg, std::vector<std::uint8_t>{});
    EXPECT_TRUE(f.empty());
    EXPECT_TRUE(demod_ofdm(f, cfg).empty());
}

TEST(Ofdm, ModDemodIdentityOverRandomPayloads) {
    RandomStream rng(5);
    for (int bps : {2, 4, 6}) {
        OfdmConfig cfg;
        cfg.bits_per_symbol = bps;
        cfg.n_resource_blocks = 6;
        cfg.fft_size = 128;
        cfg.cp_len = 9;
        for (int t = 0; t < 50; ++t) {
            const std::size_t n = cfg.bits_per_ofdm_symbol() * (1 + rng.index(3));
            const auto bits = random_bits(n, rng);
            EXPECT_EQ(demod_ofdm(gen_ofdm_frame(cfg, bits), cfg), bits) << "bps " << bps;
        }
    }
}

TEST(Ofdm, PaddingIsRecordedAndDecodedAsZeros) {
    OfdmConfig cfg;
    RandomStream rng(6);
    const auto bits = random_bits(1000, rng);
    const auto pad = ofdm_padding_bits(cfg, bits.size());
    EXPECT_EQ(pad, cfg.bits_per_ofdm_symbol() - 1000);
    const auto got = demod_ofdm(gen_ofdm_frame(cfg, bits), cfg);
    ASSERT_EQ(got.size(), bits.size() + pad);
    EXPECT_TRUE(std::equal(bits.begin(), bits.end(), got.begin()));
    EXPECT_TRUE(std::all_of(got.begin() + 1000, got.end(), [](auto b) { return b == 0; }));
}

TEST(Ofdm, UnitAverageSymbolEnergy) {
    OfdmConfig cfg;
    RandomStream rng(7);
    const auto f = gen_ofdm_frame(cfg, random_bits(cfg.bits_per_ofdm_symbol() * 20, rng));
    // Unit average power in the time domain, over the useful part of each symbol.
    double p = 0;
    std::size_t cnt = 0;
    for (std::size_t s = 0; s < 20; ++s)
        for (int k = cfg.cp_len; k < cfg.symbol_len(); ++k, ++cnt) p += std::norm(f.samples[s * cfg.symbol_len() + k]);
    EXPECT_NEAR(p / cnt, 1.0, 0.03);
}

TEST(Ofdm, ZeroFrameDecodesToLowestGrayIndex) {
    OfdmConfig cfg;
    IqFrame f = frame_of(std::vector<cplx>(cfg.symbol_len()), cfg.sample_rate_hz());
    const auto bits = demod_ofdm(f, cfg);
    ASSERT_EQ(bits.size(), cfg.bits_per_ofdm_symbol());
    // Every symbol decodes to the same pattern; the first 4 bits define it.
    for (std::size_t i = 0; i < bits.size(); ++i) EXPECT_EQ(bits[i], bits[i % 4]);
}

TEST(Ofdm, LengthMismatchRejected) {
    OfdmConfig cfg;
    IqFrame f = frame_of(std::vector<cplx>(cfg.symbol_len() + 1));
    try {
        demod_ofdm(f, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::length_mismatch);
    }
}

TEST(Ofdm, BerAt30DbBelowTextbookBound) {
    OfdmConfig cfg;
    RandomStream rng(8);
    const std::size_t n_sym = 1e5 / cfg.bits_per_ofdm_symbol() + 1;
    const auto bits = random_bits(n_sym * cfg.bits_per_ofdm_symbol(), rng);
    const auto tx = gen_ofdm_frame(cfg, bits);
    RandomStream nr(9);
    const auto rx = add_awgn(tx, 30.0, nr);
    const auto got = demod_ofdm(rx, cfg);
    std::size_t err = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) err += got[i] != bits[i];
    const double ber = double(err) / double(bits.size());
    // Gray 16-QAM: BER ~ (3/8) erfc(sqrt(Es/N0 / 10)), effectively 0 at 30 dB.
    const double per_subcarrier_snr = db_to_lin(30.0) * cfg.fft_size / cfg.n_active();
    const double textbook = 0.375 * std::erfc(std::sqrt(per_subcarrier_snr / 10.0));
    EXPECT_LT(ber, 1e-3);
    EXPECT_LT(textbook, 1e-3);
}

TEST(Ofdm, ConfigValidationNamesField) {
    OfdmConfig cfg;
    cfg.fft_size = 512;
    try {
        cfg.validate();
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "fft_size");
    }
    cfg = OfdmConfig{};
    cfg.bits_per_symbol = 3;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = OfdmConfig{};
    cfg.cp_len = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(FreeSpace, ClosedFormAt1kmAnd4GHz) {
    const double d = 1000, f = 4e9;
    const double oracle = 20 * std::log10(4 * std::numbers::pi * d * f / 299792458.0);
    EXPECT_NEAR(free_space_loss_db({d, f}), oracle, 1e-12);
    EXPECT_NEAR(free_space_loss_db({d, f}), 104.49, 0.01);
}

TEST(FreeSpace, UnitArgumentAndDoubling) {
    const double f = 4e9;
    const double d0 = 299792458.0 / (4 * std::numbers::pi * f);
    EXPECT_NEAR(free_space_loss_db({d0, f}), 0.0, 1e-9);
    EXPECT_NEAR(free_space_loss_db({2000, f}) - free_space_loss_db({1000, f}), 6.0206, 1e-4);
}

TEST(FreeSpace, StrictlyIncreasing) {
    double prev = -1e9;
    for (double d = 1; d < 1e5; d *= 1.7) {
        const double v = free_space_loss_db({d, 4e9});
        EXPECT_GT(v, prev);
        prev = v;
    }
    prev = -1e9;
    for (double f = 1e6; f < 1e11; f *= 2.3) {
        const double v = free_space_loss_db({1000, f});
        EXPECT_GT(v, prev);
        prev = v;
    }
    EXPECT_THROW(free_space_loss_db({0.0, 4e9}), ValidationError);
}

TEST(Tdl, DefaultProfileShapeAndSpread) {
    const auto p = TdlProfile::exponential();
    ASSERT_EQ(p.tap_delays_s.size(), 3u);
    double sum = 0;
    for (double x : p.tap_powers_lin) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_NEAR(p.rms_delay_spread(), 300e-9, 0.05 * 300e-9);
    // Delay ratios 0 : 1 : 3.
    EXPECT_NEAR(p.tap_delays_s[2] / p.tap_delays_s[1], 3.0, 1e-12);
    EXPECT_NO_THROW(p.validate());
}

TEST(Tdl, SingleDeterministicTapIsIdentity) {
    RandomStream rng(10);
    const auto f = frame_of({{1, 2}, {3, -1}, {0, 0.5}});
    const auto out = apply_tdl_channel(f, TdlProfile::identity(), rng);
    ASSERT_EQ(out.size(), f.size());
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(out.samples[i], f.samples[i]);
}

TEST(Tdl, TwoTapConvolutionMatchesBruteForce) {
    const double fs = 1e6;
    TdlProfile p;
    p.tap_delays_s = {0.0, 2e-6};
    p.tap_powers_lin = {0.5, 0.5};
    p.delay_spread_s = 1e-6;
    p.rayleigh = false;
    RandomStream rng(11);
    const auto f = frame_of({{1, 0}, {2, 1}, {-1, 3}, {0.5, -0.5}, {4, 4}}, fs);
    const auto out = apply_tdl_channel(f, p, rng);
    ASSERT_EQ(out.size(), f.size() + 2);
    const double g = std::sqrt(0.5);
    for (std::size_t n = 0; n < out.size(); ++n) {
        cplx want{};
        if (n < f.size()) want += g * f.samples[n];
        if (n >= 2 && n - 2 < f.size()) want += g * f.samples[n - 2];
        EXPECT_NEAR(std::abs(out.samples[n] - want), 0.0, 1e-12);
    }
}

TEST(Tdl, PowerConservedInExpectation) {
    const double fs = 15.36e6;
    const auto p = TdlProfile::exponential();
    RandomStream sig(12);
    IqFrame f;
    f.sample_rate_hz = fs;
    for (int i = 0; i < 256; ++i) f.samples.push_back(sig.complex_normal(1.0));
    const double in_energy = f.energy();
    // 1000 seeds, 20 fading realizations each: one realization's gain has a
    // standard deviation near 0.65, too wide for a 2% band on 1000 draws.
    double acc = 0;
    const int per_seed = 20;
    for (int s = 0; s < 1000; ++s) {
        RandomStream rng(1000 + s);
        for (int k = 0; k < per_seed; ++k) acc += apply_tdl_channel(f, p, rng).energy();
    }
    EXPECT_NEAR(acc / (1000.0 * per_seed) / in_energy, 1.0, 0.02);
}

TEST(Tdl, EmptyFrameRejected) {
    RandomStream rng(13);
    EXPECT_THROW(apply_tdl_channel(IqFrame{}, TdlProfile::exponential(), rng), Error);
}

TEST(Tdl, CorrelatedTapsInterpolate) {
    RandomStream rng(14);
    const auto p = TdlProfile::exponential();
    const auto a = draw_tdl_taps(p, 1e7, rng);
    const auto b = draw_tdl_taps(p, 1e7, rng);
    const auto one = correlate_taps(a, b, 1.0);
    const auto zero = correlate_taps(a, b, 0.0);
    for (std::size_t i = 0; i < a.gains.size(); ++i) {
        EXPECT_EQ(one.gains[i], a.gains[i]);
        EXPECT_EQ(zero.gains[i], b.gains[i]);
    }
    ChannelTaps c = a;
    c.delays.push_back(9);
    c.gains.push_back({});
    EXPECT_THROW(correlate_taps(a, c, 0.5), Error);
}

TEST(Awgn, InfiniteSnrLeavesFrameUnchanged) {
    RandomStream rng(15);
    const auto f = frame_of({{1, 1}, {2, 0}});
    const auto out = add_awgn(f, std::numeric_limits<double>::infinity(), rng);
    EXPECT_EQ(out.samples, f.samples);
}

TEST(Awgn, NoiseVarianceMatchesSnr) {
    IqFrame f;
    f.samples.assign(100000, cplx{1.0, 0.0});
    for (double snr : {0.0, 10.0}) {
        RandomStream rng(16);
        const auto out = add_awgn(f, snr, rng);
        double p = 0;
        for (std::size_t i = 0; i < f.size(); ++i) p += std::norm(out.samples[i] - f.samples[i]);
        p /= double(f.size());
        EXPECT_NEAR(p, 1.0 / db_to_lin(snr), 0.05 / db_to_lin(snr));
    }
}

TEST(Awgn, ZeroPowerWithFiniteSnrRejected) {
    RandomStream rng(17);
    try {
        add_awgn(frame_of({{0, 0}}), 3.0, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::zero_power_signal);
    }
}

TEST(Superpose, IdentityCancellationAndArithmetic) {
    RandomStream rng(18);
    IqFrame a, b;
    for (int i = 0; i < 10; ++i) {
        a.samples.push_back(rng.complex_normal());
        b.samples.push_back(rng.complex_normal());
    }
    const auto id = superpose({a}, {1.0});
    EXPECT_EQ(id.samples, a.samples);
    EXPECT_EQ(id.origin, Origin::Mixture);
    const auto zero = superpose({a, a}, {1.0, -1.0});
    for (const auto& s : zero.samples) EXPECT_EQ(s, cplx{});
    const auto mix = superpose({a, b}, {2.0, 3.0});
    for (int i = 0; i < 10; ++i) EXPECT_NEAR(std::abs(mix.samples[i] - (2.0 * a.samples[i] + 3.0 * b.samples[i])), 0, 1e-15);
}

TEST(Superpose, ZeroPadsShorterFrames) {
    const auto s = superpose({frame_of({{1, 0}, {1, 0}, {1, 0}}), frame_of({{1, 0}})}, {1.0, 1.0});
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.samples[0], cplx(2, 0));
    EXPECT_EQ(s.samples[2], cplx(1, 0));
}

TEST(Superpose, RejectsEmptyListAndMixedRates) {
    EXPECT_THROW(superpose(std::span<const IqFrame>{}, std::span<const double>{}), Error);
    EXPECT_THROW(superpose({frame_of({{1, 0}}, 1.0), frame_of({{1, 0}}, 2.0)}, {1.0, 1.0}), Error);
}

TEST(Rssi, ConstantZeroAndStepFrames) {
    IqFrame ones;
    ones.samples.assign(1000, cplx{1.0, 0.0});
    for (std::size_t bins : {1u, 7u, 200u})
        for (double v : rssi_features(ones, bins)) EXPECT_NEAR(v, 0.0, 1e-12);

    IqFrame zeros;
    zeros.samples.assign(400, cplx{});
    for (double v : rssi_features(zeros, 200)) EXPECT_EQ(v, rssi_floor_db);

    IqFrame step;
    step.samples.assign(100, cplx{1.0, 0.0});
    step.samples.resize(200, cplx{2.0, 0.0});
    const auto f = rssi_features(step, 2);
    EXPECT_NEAR(f[0], 0.0, 1e-12);
    EXPECT_NEAR(f[1], 20 * std::log10(2.0), 1e-9);
}

TEST(Rssi, FrameTooShort) {
    IqFrame f;
    f.samples.assign(10, cplx{1, 0});
    try {
        rssi_features(f, 11);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::frame_too_short);
    }
}

TEST(IqFeatures, LengthRealFrameAndNormalization) {
    RandomStream rng(19);
    IqFrame f;
    for (int i = 0; i < 300; ++i) f.samples.push_back(3.0 * rng.complex_normal());
    const auto v = iq_features(f, 200);
    ASSERT_EQ(v.size(), 400u);
    double p = 0;
    for (std::size_t i = 0; i < 200; ++i) p += v[2 * i] * v[2 * i] + v[2 * i + 1] * v[2 * i + 1];
    EXPECT_NEAR(p / 200, 1.0, 1e-9);

    IqFrame real;
    for (int i = 0; i < 200; ++i) real.samples.push_back({rng.normal(), 0.0});
    const auto r = iq_features(real, 200);
    for (std::size_t i = 1; i < r.size(); i += 2) EXPECT_EQ(r[i], 0.0);

    EXPECT_THROW(iq_features(real, 201), Error);
}

TEST(IqFeatures, FrameFromIqInvertsInterleaving) {
    const std::vector<double> v{1, 2, 3, 4};
    const auto f = frame_from_iq(v, 5.0, Origin::Spoof);
    ASSERT_EQ(f.size(), 2u);
    EXPECT_EQ(f.samples[1], cplx(3, 4));
    EXPECT_EQ(f.origin, Origin::Spoof);
}

TEST(IqFile, RoundTripThroughFloat32) {
    RandomStream rng(20);
    IqFrame f;
    f.sample_rate_hz = 15.36e6;
    f.origin = Origin::UeSignal;
    for (int i = 0; i < 64; ++i) f.samples.push_back(rng.complex_normal());
    const auto base = std::filesystem::temp_directory_path() / "aml5g_iq_roundtrip";
    write_iq_file(base, f);
    const auto g = read_iq_file(base);
    EXPECT_EQ(g.sample_rate_hz, f.sample_rate_hz);
    EXPECT_EQ(g.origin, f.origin);
    ASSERT_EQ(g.size(), f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        EXPECT_EQ(g.samples[i].real(), static_cast<double>(static_cast<float>(f.samples[i].real())));
        EXPECT_EQ(g.samples[i].imag(), static_cast<double>(static_cast<float>(f.samples[i].imag())));
    }
}

TEST(Reproducibility, EqualSeedsGiveIdenticalDraws) {
    for (int rep = 0; rep < 2; ++rep) {
        RandomStream a(21), b(21);
        EXPECT_EQ(noise_frame(100, 1.0, 2.0, a).samples, noise_frame(100, 1.0, 2.0, b).samples);
        RandomStream c(22), d(22);
        IqFrame f;
        f.samples.assign(50, cplx{1, 0});
        f.sample_rate_hz = 1e7;
        EXPECT_EQ(apply_tdl_channel(f, TdlProfile::exponential(), c).samples,
                  apply_tdl_channel(f, TdlProfile::exponential(), d).samples);
    }
}

TEST(RandomStreams, ChildrenIgnoreParentConsumption) {
    RandomStream a(23), b(23);
    for (int i = 0; i < 100; ++i) b.uniform();
    RandomStream ca = a.child("x"), cb = b.child("x");
    EXPECT_EQ(ca.uniform(), cb.uniform());
    EXPECT_NE(a.child("x").key(), a.child("y").key());
    EXPECT_NE(a.child(1).key(), a.child(2).key());
}
