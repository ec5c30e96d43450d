#pragma once

// Baseband waveform synthesis, channel effects and feature extraction.

#include <aml5g/error.hpp>
#include <aml5g/random.hpp>

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace aml5g {

using cplx = std::complex<double>;

inline constexpr double speed_of_light = 299792458.0;
inline constexpr double rssi_floor_db = -120.0;

enum class Origin { Radar, UeSignal, Jammer, Noise, Spoof, Mixture };

inline std::string_view origin_name(Origin o) {
    switch (o) {
        case Origin::Radar: return "Radar";
        case Origin::UeSignal: return "UeSignal";
        case Origin::Jammer: return "Jammer";
        case Origin::Noise: return "Noise";
        case Origin::Spoof: return "Spoof";
        case Origin::Mixture: return "Mixture";
    }
    return "Mixture";
}

inline Origin parse_origin(std::string_view s) {
    for (Origin o : {Origin::Radar, Origin::UeSignal, Origin::Jammer, Origin::Noise, Origin::Spoof, Origin::Mixture})
        if (origin_name(o) == s) return o;
    throw Error(Errc::parse_error, "unknown origin '" + std::string(s) + "'");
}

/// Complex baseband samples plus the rate they were taken at.
struct IqFrame {
    std::vector<cplx> samples;
    double sample_rate_hz = 1.0;
    Origin origin = Origin::Mixture;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }

    /// Mean |x|^2; zero for an empty frame.
    double power() const {
        if (samples.empty()) return 0.0;
        double acc = 0.0;
        for (const auto& s : samples) acc += std::norm(s);
        return acc / static_cast<double>(samples.size());
    }

    double energy() const {
        double acc = 0.0;
        for (const auto& s : samples) acc += std::norm(s);
        return acc;
    }

    bool all_finite() const {
        return std::all_of(samples.begin(), samples.end(),
                           [](const cplx& s) { return std::isfinite(s.real()) && std::isfinite(s.imag()); });
    }

    IqFrame& scale(double gain) {
        for (auto& s : samples) s *= gain;
        return *this;
    }
};

// ---------------------------------------------------------------------------
// OFDM

struct OfdmConfig {
    double subcarrier_spacing_hz = 15e3;
    int n_resource_blocks = 52;
    int fft_size = 1024;
    int cp_len = 72;
    int bits_per_symbol = 4;
    double carrier_hz = 4e9;

    int n_active() const noexcept { return 12 * n_resource_blocks; }
    int symbol_len() const noexcept { return fft_size + cp_len; }
    double sample_rate_hz() const noexcept { return subcarrier_spacing_hz * fft_size; }
    std::size_t bits_per_ofdm_symbol() const noexcept {
        return static_cast<std::size_t>(n_active()) * static_cast<std::size_t>(bits_per_symbol);
    }

    void validate() const {
        if (!(subcarrier_spacing_hz > 0)) throw ValidationError("subcarrier_spacing_hz", "must be positive");
        if (n_resource_blocks < 1) throw ValidationError("n_resource_blocks", "must be >= 1");
        if (fft_size < n_active()) throw ValidationError("fft_size", "must be >= active subcarrier count");
        if (cp_len < 1 || cp_len >= fft_size) throw ValidationError("cp_len", "must lie in [1, fft_size)");
        if (bits_per_symbol != 2 && bits_per_symbol != 4 && bits_per_symbol != 6)
            throw ValidationError("bits_per_symbol", "must be 2, 4 or 6");
        if (!(carrier_hz > 0)) throw ValidationError("carrier_hz", "must be positive");
    }
};

/// Zero bits appended by gen_ofdm_frame to fill the last OFDM symbol.
inline std::size_t ofdm_padding_bits(const OfdmConfig& cfg, std::size_t payload_bits) {
    const std::size_t per = cfg.bits_per_ofdm_symbol();
    const std::size_t rem = payload_bits % per;
    return rem == 0 ? 0 : per - rem;
}

namespace detail {

inline constexpr unsigned gray(unsigned i) { return i ^ (i >> 1); }

// Per-axis PAM level for Gray-coded bits: level index i has amplitude 2i-(L-1).
struct QamAxis {
    int bits;
    int levels;
    double scale;  // 1/sqrt(average constellation energy)
    std::vector<unsigned> index_of_code;  // code -> level index
    std::vector<unsigned> code_of_index;  // level index -> code

    explicit QamAxis(int bits_per_symbol) : bits(bits_per_symbol / 2), levels(1 << (bits_per_symbol / 2)) {
        const double l = levels;
        scale = 1.0 / std::sqrt(2.0 * (l * l - 1.0) / 3.0);
        index_of_code.resize(levels);
        code_of_index.resize(levels);
        for (int i = 0; i < levels; ++i) {
            code_of_index[i] = gray(static_cast<unsigned>(i));
            index_of_code[code_of_index[i]] = static_cast<unsigned>(i);
        }
    }

    double amplitude(unsigned code) const {
        return (2.0 * index_of_code[code] - (levels - 1)) * scale;
    }

    // Nearest level; exact ties go to the lowest Gray code.
    unsigned decide(double x) const {
        unsigned best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < levels; ++i) {
            const double d = std::abs(x - (2.0 * i - (levels - 1)) * scale);
            const unsigned code = code_of_index[i];
            if (d < best_d - 1e-12 || (std::abs(d - best_d) <= 1e-12 && code < best)) {
                best = code;
                best_d = std::min(d, best_d);
            }
        }
        return best;
    }
};

// Active subcarrier k (0..n_active-1) occupies FFT bin (k - n_active/2) mod fft_size.
inline std::size_t active_bin(int k, const OfdmConfig& cfg) {
    const int offset = k - cfg.n_active() / 2;
    return static_cast<std::size_t>((offset % cfg.fft_size + cfg.fft_size) % cfg.fft_size);
}

}  // namespace detail

/// Gray-mapped QAM on the active subcarriers, IFFT and cyclic prefix.
///
/// Payload is zero-padded to a whole number of OFDM symbols; see
/// ofdm_padding_bits(). The time-domain signal has unit average power.
inline IqFrame gen_ofdm_frame(const OfdmConfig& cfg, std::span<const std::uint8_t> payload_bits) {
    cfg.validate();
    IqFrame out;
    out.sample_rate_hz = cfg.sample_rate_hz();
    out.origin = Origin::UeSignal;
    if (payload_bits.empty()) return out;

    const std::size_t per = cfg.bits_per_ofdm_symbol();
    const std::size_t n_sym = (payload_bits.size() + per - 1) / per;
    const detail::QamAxis axis(cfg.bits_per_symbol);
    const int half = cfg.bits_per_symbol / 2;
    const std::size_t n = static_cast<std::size_t>(cfg.fft_size);
    const double time_scale = static_cast<double>(n) / std::sqrt(static_cast<double>(cfg.n_active()));

    Eigen::FFT<double> fft;
    std::vector<cplx> grid(n), time(n);
    out.samples.reserve(n_sym * static_cast<std::size_t>(cfg.symbol_len()));

    auto bit_at = [&](std::size_t i) -> unsigned { return i < payload_bits.size() ? (payload_bits[i] & 1u) : 0u; };

    for (std::size_t s = 0; s < n_sym; ++s) {
        std::fill(grid.begin(), grid.end(), cplx{});
        for (int k = 0; k < cfg.n_active(); ++k) {
            const std::size_t base = s * per + static_cast<std::size_t>(k) * cfg.bits_per_symbol;
            unsigned ci = 0, cq = 0;
            for (int b = 0; b < half; ++b) {
                ci = (ci << 1) | bit_at(base + b);
                cq = (cq << 1) | bit_at(base + half + b);
            }
            grid[detail::active_bin(k, cfg)] = {axis.amplitude(ci), axis.amplitude(cq)};
        }
        fft.inv(time, grid);
        for (auto& t : time) t *= time_scale;
        out.samples.insert(out.samples.end(), time.end() - cfg.cp_len, time.end());
        out.samples.insert(out.samples.end(), time.begin(), time.end());
    }
    return out;
}

inline IqFrame gen_ofdm_frame(const OfdmConfig& cfg, const std::vector<std::uint8_t>& payload_bits) {
    return gen_ofdm_frame(cfg, std::span<const std::uint8_t>(payload_bits));
}

/// Hard-decision demodulation; returns bits for every active subcarrier,
/// including any padding added at modulation.
inline std::vector<std::uint8_t> demod_ofdm(const IqFrame& frame, const OfdmConfig& cfg) {
    cfg.validate();
    const std::size_t sym_len = static_cast<std::size_t>(cfg.symbol_len());
    if (frame.size() % sym_len != 0)
        throw Error(Errc::length_mismatch, "frame length " + std::to_string(frame.size()) +
                                               " is not a multiple of " + std::to_string(sym_len));
    const std::size_t n_sym = frame.size() / sym_len;
    const std::size_t n = static_cast<std::size_t>(cfg.fft_size);
    const detail::QamAxis axis(cfg.bits_per_symbol);
    const int half = cfg.bits_per_symbol / 2;
    const double freq_scale = std::sqrt(static_cast<double>(cfg.n_active())) / static_cast<double>(n);

    Eigen::FFT<double> fft;
    std::vector<cplx> time(n), grid(n);
    std::vector<std::uint8_t> bits;
    bits.reserve(n_sym * cfg.bits_per_ofdm_symbol());

    for (std::size_t s = 0; s < n_sym; ++s) {
        const auto first = frame.samples.begin() + static_cast<std::ptrdiff_t>(s * sym_len + cfg.cp_len);
        std::copy(first, first + static_cast<std::ptrdiff_t>(n), time.begin());
        fft.fwd(grid, time);
        for (int k = 0; k < cfg.n_active(); ++k) {
            const cplx x = grid[detail::active_bin(k, cfg)] * freq_scale;
            const unsigned ci = axis.decide(x.real());
            const unsigned cq = axis.decide(x.imag());
            for (int b = half - 1; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((ci >> b) & 1u));
            for (int b = half - 1; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((cq >> b) & 1u));
        }
    }
    return bits;
}

// ---------------------------------------------------------------------------
// Radar

struct RadarConfig {
    double pulse_width_s = 10e-6;
    double pulse_repetition_interval_s = 100e-6;
    double peak_power_lin = 1.0;
    double start_offset_s = 0.0;  // time of the first pulse leading edge

    void validate() const {
        if (!(pulse_width_s > 0)) throw ValidationError("pulse_width_s", "must be positive");
        if (!(pulse_width_s < pulse_repetition_interval_s))
            throw Error(Errc::invalid_config, "pulse width must be shorter than the pulse repetition interval");
        if (!(peak_power_lin >= 0)) throw ValidationError("peak_power_lin", "must be non-negative");
        if (start_offset_s < 0) throw ValidationError("start_offset_s", "must be non-negative");
    }
};

/// Rectangular pulse train; each pulse carries an independent random carrier phase.
inline IqFrame gen_radar_pulse(const RadarConfig& cfg, std::size_t n_samples, double sample_rate_hz,
                               RandomStream& rng) {
    cfg.validate();
    require(n_samples > 0, Errc::invalid_config, "radar frame needs at least one sample");
    require(sample_rate_hz > 0, Errc::invalid_config, "sample rate must be positive");

    IqFrame out;
    out.samples.assign(n_samples, cplx{});
    out.sample_rate_hz = sample_rate_hz;
    out.origin = Origin::Radar;

    const double amp = std::sqrt(cfg.peak_power_lin);
    const auto width = static_cast<std::ptrdiff_t>(std::llround(cfg.pulse_width_s * sample_rate_hz));
    const double pri = cfg.pulse_repetition_interval_s;
    // A pulse that started before the window may still be on at sample 0.
    const double first = cfg.start_offset_s - pri * std::ceil(cfg.start_offset_s / pri);
    for (long k = 0;; ++k) {
        const auto start = static_cast<std::ptrdiff_t>(std::llround((first + k * pri) * sample_rate_hz));
        if (start >= static_cast<std::ptrdiff_t>(n_samples)) break;
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const cplx value = std::polar(amp, phase);
        const auto lo = std::max<std::ptrdiff_t>(start, 0);
        const auto hi = std::min<std::ptrdiff_t>(start + width, static_cast<std::ptrdiff_t>(n_samples));
        for (auto i = lo; i < hi; ++i) out.samples[static_cast<std::size_t>(i)] = value;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Propagation

struct LinkGeometry {
    double distance_m = 1000.0;
    double carrier_hz = 4e9;

    void validate() const {
        if (!(distance_m > 0)) throw ValidationError("distance_m", "must be positive");
        if (!(carrier_hz > 0)) throw ValidationError("carrier_hz", "must be positive");
    }
};

inline double free_space_loss_db(const LinkGeometry& g) {
    g.validate();
    return 20.0 * std::log10(4.0 * std::numbers::pi * g.distance_m * g.carrier_hz / speed_of_light);
}

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Tapped delay line multipath profile.
struct TdlProfile {
    std::vector<double> tap_delays_s;
    std::vector<double> tap_powers_lin;
    double delay_spread_s = 300e-9;
    bool rayleigh = true;  // false: deterministic sqrt(power) tap gains

    /// Three taps with the {0, 1, 3} delay shape and exponential power decay,
    /// delays scaled so the RMS delay spread equals `delay_spread_s`.
    static TdlProfile exponential(double delay_spread_s = 300e-9) {
        TdlProfile p;
        p.delay_spread_s = delay_spread_s;
        const std::vector<double> shape{0.0, 1.0, 3.0};
        for (double s : shape) p.tap_powers_lin.push_back(std::exp(-s));
        p.tap_delays_s = shape;
        p.normalize();
        const double unit_rms = p.rms_delay_spread();
        for (auto& d : p.tap_delays_s) d *= delay_spread_s / unit_rms;
        return p;
    }

    static TdlProfile identity() {
        TdlProfile p;
        p.tap_delays_s = {0.0};
        p.tap_powers_lin = {1.0};
        p.delay_spread_s = 0.0;
        p.rayleigh = false;
        return p;
    }

    void normalize() {
        const double total = std::accumulate(tap_powers_lin.begin(), tap_powers_lin.end(), 0.0);
        if (total > 0)
            for (auto& p : tap_powers_lin) p /= total;
    }

    double rms_delay_spread() const {
        const double total = std::accumulate(tap_powers_lin.begin(), tap_powers_lin.end(), 0.0);
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < tap_delays_s.size(); ++i) {
            m1 += tap_powers_lin[i] * tap_delays_s[i];
            m2 += tap_powers_lin[i] * tap_delays_s[i] * tap_delays_s[i];
        }
        m1 /= total;
        m2 /= total;
        return std::sqrt(std::max(0.0, m2 - m1 * m1));
    }

    void validate() const {
        if (tap_delays_s.empty() || tap_delays_s.size() != tap_powers_lin.size())
            throw ValidationError("tap_delays_s", "need one delay per tap power and at least one tap");
        for (std::size_t i = 0; i < tap_delays_s.size(); ++i) {
            if (tap_delays_s[i] < 0 || (i > 0 && tap_delays_s[i] < tap_delays_s[i - 1]))
                throw ValidationError("tap_delays_s", "must be ascending and non-negative");
            if (!(tap_powers_lin[i] > 0)) throw ValidationError("tap_powers_lin", "must be positive");
        }
        const double total = std::accumulate(tap_powers_lin.begin(), tap_powers_lin.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-12) throw ValidationError("tap_powers_lin", "must sum to 1");
        if (std::abs(rms_delay_spread() - delay_spread_s) > 0.05 * delay_spread_s + 1e-15)
            throw ValidationError("delay_spread_s", "RMS delay spread of the taps is not within 5%");
    }

    std::size_t max_delay_samples(double sample_rate_hz) const {
        std::size_t m = 0;
        for (double d : tap_delays_s) m = std::max<std::size_t>(m, static_cast<std::size_t>(std::llround(d * sample_rate_hz)));
        return m;
    }
};

/// One realization of a multipath channel at a fixed sample rate.
struct ChannelTaps {
    std::vector<std::size_t> delays;  // in samples
    std::vector<cplx> gains;

    std::size_t max_delay() const { return delays.empty() ? 0 : *std::max_element(delays.begin(), delays.end()); }

    double power_gain() const {
        double acc = 0.0;
        for (const auto& g : gains) acc += std::norm(g);
        return acc;
    }

    /// Rescales the taps to unit total power gain.
    ChannelTaps& normalize() {
        const double p = power_gain();
        if (p > 0)
            for (auto& g : gains) g /= std::sqrt(p);
        return *this;
    }
};

inline ChannelTaps draw_tdl_taps(const TdlProfile& p, double sample_rate_hz, RandomStream& rng) {
    p.validate();
    ChannelTaps taps;
    for (std::size_t t = 0; t < p.tap_delays_s.size(); ++t) {
        taps.delays.push_back(static_cast<std::size_t>(std::llround(p.tap_delays_s[t] * sample_rate_hz)));
        taps.gains.push_back(p.rayleigh ? rng.complex_normal(p.tap_powers_lin[t]) : cplx{std::sqrt(p.tap_powers_lin[t]), 0.0});
    }
    return taps;
}

/// rho * a + sqrt(1 - rho^2) * b, tap by tap (both drawn from the same profile).
inline ChannelTaps correlate_taps(const ChannelTaps& a, const ChannelTaps& b, double rho) {
    require(a.delays == b.delays, Errc::length_mismatch, "correlated taps need identical delays");
    ChannelTaps out = a;
    const double w = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (std::size_t i = 0; i < out.gains.size(); ++i) out.gains[i] = rho * a.gains[i] + w * b.gains[i];
    return out;
}

/// Linear convolution; output length = input length + max tap delay.
inline IqFrame apply_taps(const IqFrame& frame, const ChannelTaps& taps) {
    IqFrame out;
    out.sample_rate_hz = frame.sample_rate_hz;
    out.origin = frame.origin;
    out.samples.assign(frame.size() + taps.max_delay(), cplx{});
    for (std::size_t t = 0; t < taps.gains.size(); ++t)
        for (std::size_t n = 0; n < frame.size(); ++n) out.samples[n + taps.delays[t]] += taps.gains[t] * frame.samples[n];
    return out;
}

/// Draws one channel realization (tap gains) per call.
inline IqFrame apply_tdl_channel(const IqFrame& frame, const TdlProfile& p, RandomStream& rng) {
    require(!frame.empty(), Errc::empty_input, "TDL channel needs a non-empty frame");
    return apply_taps(frame, draw_tdl_taps(p, frame.sample_rate_hz, rng));
}

// ---------------------------------------------------------------------------
// Noise

/// Adds complex Gaussian noise of the given absolute variance.
inline IqFrame add_noise(const IqFrame& frame, double noise_power, RandomStream& rng) {
    IqFrame out = frame;
    if (noise_power <= 0) return out;
    for (auto& s : out.samples) s += rng.complex_normal(noise_power);
    return out;
}

/// AWGN scaled to the measured frame power; snr_db = +inf leaves the frame untouched.
inline IqFrame add_awgn(const IqFrame& frame, double snr_db, RandomStream& rng) {
    if (std::isinf(snr_db) && snr_db > 0) return frame;
    const double p = frame.power();
    require(p > 0, Errc::zero_power_signal, "cannot set a finite SNR on a zero-power frame");
    return add_noise(frame, p / db_to_lin(snr_db), rng);
}

inline IqFrame noise_frame(std::size_t n, double sample_rate_hz, double power, RandomStream& rng) {
    IqFrame out;
    out.sample_rate_hz = sample_rate_hz;
    out.origin = Origin::Noise;
    out.samples.resize(n);
    for (auto& s : out.samples) s = rng.complex_normal(power);
    return out;
}

/// Sample-wise weighted sum; shorter frames are zero-padded.
inline IqFrame superpose(std::span<const IqFrame> frames, std::span<const double> gains_lin) {
    require(!frames.empty(), Errc::empty_input, "superpose needs at least one frame");
    require(frames.size() == gains_lin.size(), Errc::length_mismatch, "one gain per frame required");
    IqFrame out;
    out.sample_rate_hz = frames[0].sample_rate_hz;
    out.origin = Origin::Mixture;
    std::size_t len = 0;
    for (const auto& f : frames) {
        if (f.sample_rate_hz != out.sample_rate_hz)
            throw Error(Errc::sample_rate_mismatch, "superposed frames must share a sample rate");
        len = std::max(len, f.size());
    }
    out.samples.assign(len, cplx{});
    for (std::size_t i = 0; i < frames.size(); ++i)
        for (std::size_t n = 0; n < frames[i].size(); ++n) out.samples[n] += gains_lin[i] * frames[i].samples[n];
    return out;
}

inline IqFrame superpose(std::initializer_list<IqFrame> frames, std::initializer_list<double> gains) {
    std::vector<IqFrame> f(frames);
    std::vector<double> g(gains);
    return superpose(std::span<const IqFrame>(f), std::span<const double>(g));
}

// ---------------------------------------------------------------------------
// Features

/// Mean power per contiguous equal-length window, in dB, floored at -120 dB.
/// Trailing samples that do not fill a whole window are ignored.
inline std::vector<double> rssi_features(const IqFrame& frame, std::size_t n_bins) {
    require(n_bins > 0, Errc::invalid_config, "n_bins must be positive");
    if (frame.size() < n_bins)
        throw Error(Errc::frame_too_short, "frame of " + std::to_string(frame.size()) + " samples cannot fill " +
                                               std::to_string(n_bins) + " bins");
    const std::size_t w = frame.size() / n_bins;
    std::vector<double> out(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        double acc = 0.0;
        for (std::size_t i = b * w; i < (b + 1) * w; ++i) acc += std::norm(frame.samples[i]);
        const double mean = acc / static_cast<double>(w);
        out[b] = mean > 0 ? std::max(rssi_floor_db, lin_to_db(mean)) : rssi_floor_db;
    }
    return out;
}

/// Rescales an interleaved [re, im, ...] row to unit average complex power.
/// An all-zero row is left as is.
template <typename Row>
void normalize_iq_row(Row&& row) {
    const auto n = row.size() / 2;
    double acc = 0.0;
    for (decltype(row.size()) i = 0; i < row.size(); ++i) acc += static_cast<double>(row[i]) * static_cast<double>(row[i]);
    if (acc <= 0 || n == 0) return;
    const double s = std::sqrt(static_cast<double>(n) / acc);
    for (decltype(row.size()) i = 0; i < row.size(); ++i) row[i] = static_cast<std::decay_t<decltype(row[i])>>(row[i] * s);
}

/// First n_complex samples as [re0, im0, re1, im1, ...] at unit average power.
inline std::vector<double> iq_features(const IqFrame& frame, std::size_t n_complex) {
    require(n_complex > 0, Errc::invalid_config, "n_complex must be positive");
    if (frame.size() < n_complex)
        throw Error(Errc::frame_too_short, "frame of " + std::to_string(frame.size()) + " samples is shorter than " +
                                               std::to_string(n_complex));
    std::vector<double> out(2 * n_complex);
    for (std::size_t i = 0; i < n_complex; ++i) {
        out[2 * i] = frame.samples[i].real();
        out[2 * i + 1] = frame.samples[i].imag();
    }
    normalize_iq_row(out);
    return out;
}

/// Inverse of iq_features' interleaving (normalization is not undone).
inline IqFrame frame_from_iq(std::span<const double> interleaved, double sample_rate_hz, Origin origin) {
    require(interleaved.size() % 2 == 0, Errc::length_mismatch, "interleaved I/Q needs an even length");
    IqFrame out;
    out.sample_rate_hz = sample_rate_hz;
    out.origin = origin;
    out.samples.resize(interleaved.size() / 2);
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] = {interleaved[2 * i], interleaved[2 * i + 1]};
    return out;
}

// ---------------------------------------------------------------------------
// Raw I/Q export: <base>.iq holds little-endian float32 [re, im] pairs,
// <base>.meta holds "sample_rate_hz = ..." and "origin = ..." lines.

namespace detail {

inline void put_f32_le(std::ostream& os, float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, sizeof u);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
    char b[4];
    std::memcpy(b, &u, 4);
    os.write(b, 4);
}

inline float get_f32_le(std::istream& is) {
    char b[4];
    is.read(b, 4);
    std::uint32_t u;
    std::memcpy(&u, b, 4);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
    float v;
    std::memcpy(&v, &u, sizeof v);
    return v;
}

}  // namespace detail

inline void write_iq_file(const std::filesystem::path& base, const IqFrame& frame) {
    std::ofstream data(base.string() + ".iq", std::ios::binary);
    if (!data) throw Error(Errc::io_error, "cannot open " + base.string() + ".iq");
    for (const auto& s : frame.samples) {
        detail::put_f32_le(data, static_cast<float>(s.real()));
        detail::put_f32_le(data, static_cast<float>(s.imag()));
    }
    std::ofstream meta(base.string() + ".meta");
    if (!meta) throw Error(Errc::io_error, "cannot open " + base.string() + ".meta");
    meta.precision(17);
    meta << "sample_rate_hz = " << frame.sample_rate_hz << "\n";
    meta << "origin = " << origin_name(frame.origin) << "\n";
}

inline IqFrame read_iq_file(const std::filesystem::path& base) {
    IqFrame out;
    std::ifstream meta(base.string() + ".meta");
    if (!meta) throw Error(Errc::io_error, "cannot open " + base.string() + ".meta");
    std::string line;
    while (std::getline(meta, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "sample_rate_hz") out.sample_rate_hz = std::stod(value);
        else if (key == "origin") out.origin = parse_origin(value);
    }
    std::ifstream data(base.string() + ".iq", std::ios::binary | std::ios::ate);
    if (!data) throw Error(Errc::io_error, "cannot open " + base.string() + ".iq");
    const auto bytes = static_cast<std::size_t>(data.tellg());
    require(bytes % 8 == 0, Errc::length_mismatch, "I/Q file size is not a multiple of 8 bytes");
    data.seekg(0);
    out.samples.resize(bytes / 8);
    for (auto& s : out.samples) {
        const float re = detail::get_f32_le(data);
        const float im = detail::get_f32_le(data);
        s = {re, im};
    }
    return out;
}

}  // namespace aml5g
