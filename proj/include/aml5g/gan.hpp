#pragma once

// Generator / discriminator pair and the alternating minimax training loop.

#include <aml5g/neural.hpp>
#include <aml5g/signal.hpp>

#include <optional>

namespace aml5g {

/// Discriminator class index for rows drawn from the real (observed) data.
inline constexpr int gan_real_label = 1;
inline constexpr int gan_fake_label = 0;

template <std::floating_point T>
struct GanPair {
    Mlp<T> generator;
    Mlp<T> discriminator;
    int noise_dim = 400;

    static GanPair init(RandomStream& rng, int dim = 400) {
        RandomStream g = rng.child("generator");
        RandomStream d = rng.child("discriminator");
        return {mlp_init<T>(MlpSpec::generator(dim), g, ModelRole::Generator),
                mlp_init<T>(MlpSpec::discriminator(dim), d, ModelRole::Discriminator), dim};
    }

    void validate() const {
        if (generator.output_size() != discriminator.input_size())
            throw Error(Errc::invalid_spec, "generator output must match discriminator input");
        if (generator.input_size() != noise_dim) throw Error(Errc::invalid_spec, "generator input must equal noise_dim");
        if (discriminator.output_size() != 2) throw Error(Errc::invalid_spec, "discriminator needs two outputs");
    }
};

/// Over-the-air path from the generator's transmitter to the receiver that
/// collects the real rows: fixed multipath taps, a per-row received SNR drawn
/// uniformly from [snr_db, snr_db + spread_db] over unit-variance noise, then
/// the unit-power row normalization.
struct OtaLink {
    ChannelTaps taps;
    double snr_db = 0.0;
    double spread_db = 0.0;

    void validate() const {
        if (taps.gains.empty() || taps.gains.size() != taps.delays.size())
            throw Error(Errc::invalid_config, "OTA link needs matching tap delays and gains");
        if (!std::isfinite(snr_db) || !(spread_db >= 0) || !std::isfinite(spread_db))
            throw Error(Errc::invalid_config, "OTA link SNR must be finite with a non-negative spread");
    }

    /// Row-wise amplitude times the taps, truncated to the input width.
    /// `adjoint` applies the conjugate-transposed operator.
    template <typename M>
    M convolve(const M& x, const Eigen::Matrix<typename M::Scalar, Eigen::Dynamic, 1>& amp, bool adjoint) const {
        using S = typename M::Scalar;
        const Eigen::Index n = x.cols() / 2;
        M y = M::Zero(x.rows(), x.cols());
        for (std::size_t t = 0; t < taps.gains.size(); ++t) {
            const auto d = static_cast<Eigen::Index>(taps.delays[t]);
            if (d >= n) continue;
            const S hr = static_cast<S>(taps.gains[t].real());
            const S hi = static_cast<S>(adjoint ? -taps.gains[t].imag() : taps.gains[t].imag());
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                const S gr = amp(r) * hr, gi = amp(r) * hi;
                for (Eigen::Index k = 0; k < n - d; ++k) {
                    const Eigen::Index src = adjoint ? k + d : k;
                    const Eigen::Index dst = adjoint ? k : k + d;
                    const S xr = x(r, 2 * src), xi = x(r, 2 * src + 1);
                    y(r, 2 * dst) += gr * xr - gi * xi;
                    y(r, 2 * dst + 1) += gr * xi + gi * xr;
                }
            }
        }
        return y;
    }

    /// Received rows before normalization; `amp` receives the per-row amplitudes.
    template <typename M>
    M transmit(const M& x, RandomStream& rng, Eigen::Matrix<typename M::Scalar, Eigen::Dynamic, 1>& amp) const {
        using S = typename M::Scalar;
        amp.resize(x.rows());
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            amp(r) = static_cast<S>(std::sqrt(db_to_lin(snr_db + spread_db * rng.uniform())));
        M y = convolve(x, amp, false);
        const double sd = std::sqrt(0.5);
        for (Eigen::Index r = 0; r < y.rows(); ++r)
            for (Eigen::Index c = 0; c < y.cols(); ++c) y(r, c) += static_cast<S>(sd * rng.normal());
        return y;
    }
};

struct GanOptions {
    // Rescale every generated row to unit average complex power (the
    // convention of iq_features), with the rescaling inside the gradient path.
    bool normalize_output = true;
    // Fraction of each discriminator fake batch drawn from `extra_fake`
    // rows when those are supplied.
    double extra_fake_fraction = 0.5;
    // When set, generated rows reach the discriminator through this link
    // (and are normalized again afterwards).
    std::optional<OtaLink> air;
};

template <std::floating_point T>
struct GanResult {
    GanPair<T> pair;
    std::vector<double> discriminator_accuracy;  // per step, on that step's balanced batch
    std::vector<double> discriminator_loss;
    std::vector<double> generator_loss;
    bool mode_collapse_warning = false;
};

namespace detail {

template <typename M>
M gaussian_matrix(Eigen::Index rows, Eigen::Index cols, RandomStream& rng) {
    M z(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) z(r, c) = static_cast<typename M::Scalar>(rng.normal());
    return z;
}

// Row-wise y = x * sqrt((D/2) / ||x||^2); returns y and stores 1/||x|| * sqrt(D/2).
template <typename M>
M normalize_rows(const M& x, Eigen::Matrix<typename M::Scalar, Eigen::Dynamic, 1>& gain) {
    using S = typename M::Scalar;
    const S half = static_cast<S>(x.cols()) / S(2);
    gain.resize(x.rows());
    M y = x;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const S ss = x.row(r).squaredNorm();
        gain(r) = ss > S(0) ? std::sqrt(half / ss) : S(1);
        y.row(r) *= gain(r);
    }
    return y;
}

// Backprop through normalize_rows: gx = gain * (gy - y (y . gy) / (D/2)).
template <typename M>
M normalize_rows_backward(const M& y, const Eigen::Matrix<typename M::Scalar, Eigen::Dynamic, 1>& gain, const M& gy) {
    using S = typename M::Scalar;
    const S half = static_cast<S>(y.cols()) / S(2);
    M gx(gy.rows(), gy.cols());
    for (Eigen::Index r = 0; r < gy.rows(); ++r) {
        const S dot = y.row(r).dot(gy.row(r));
        gx.row(r) = gain(r) * (gy.row(r) - y.row(r) * (dot / half));
    }
    return gx;
}

}  // namespace detail

/// Generator forward in Eval mode, rows normalized when requested.
template <std::floating_point T>
typename Mlp<T>::Matrix generator_sample(const Mlp<T>& g, const typename Mlp<T>::Matrix& noise, bool normalize = true) {
    auto c = forward(g, noise, RunMode::Eval, nullptr);
    if (!normalize) return c.output;
    typename Mlp<T>::Vector gain;
    return detail::normalize_rows(c.output, gain);
}

/// Alternating updates: the discriminator on balanced real / generated batches,
/// then the generator through the discriminator with the non-saturating loss
/// -log D(G(z)). `extra_fake` rows, when given, are mixed into the
/// discriminator's fake half as additional negatives.
template <std::floating_point T>
GanResult<T> train_gan(GanPair<T> pair, const MatrixXd& real_data, const TrainConfig& cfg, RandomStream& rng,
                       const MatrixXd* extra_fake = nullptr, const GanOptions& opts = {}) {
    using Matrix = typename Mlp<T>::Matrix;
    using Vector = typename Mlp<T>::Vector;
    cfg.validate(/*allow_zero_steps=*/true);
    pair.validate();
    if (real_data.cols() != pair.discriminator.input_size())
        throw Error(Errc::shape_mismatch, "real rows must match the discriminator input width");

    GanResult<T> res;
    if (opts.air) opts.air->validate();
    if (cfg.n_steps == 0) {
        res.pair = std::move(pair);
        return res;
    }
    const auto bs = static_cast<Eigen::Index>(cfg.batch_size);
    if (real_data.rows() < 2 * bs)
        throw Error(Errc::invalid_config, "GAN training needs at least 2 * batch_size real rows");

    const Matrix real = real_data.template cast<T>();
    const bool use_extra = extra_fake != nullptr && extra_fake->rows() > 0 && opts.extra_fake_fraction > 0;
    const Matrix extra = use_extra ? Matrix(extra_fake->template cast<T>()) : Matrix();
    const Eigen::Index n_extra = use_extra ? std::min<Eigen::Index>(bs, static_cast<Eigen::Index>(std::llround(opts.extra_fake_fraction * bs))) : 0;

    RandomStream batch_rng = rng.child("batches");
    RandomStream noise_rng = rng.child("noise");
    Optimizer<T> opt_g(pair.generator, cfg);
    Optimizer<T> opt_d(pair.discriminator, cfg);
    auto& G = pair.generator;
    auto& D = pair.discriminator;

    std::vector<int> d_labels(static_cast<std::size_t>(2 * bs));
    for (Eigen::Index i = 0; i < bs; ++i) {
        d_labels[static_cast<std::size_t>(i)] = gan_real_label;
        d_labels[static_cast<std::size_t>(bs + i)] = gan_fake_label;
    }
    const std::vector<int> g_labels(static_cast<std::size_t>(bs), gan_real_label);

    Matrix d_batch(2 * bs, real.cols());
    Matrix last_fake;
    for (int step = 0; step < cfg.n_steps; ++step) {
        // Discriminator step.
        for (Eigen::Index i = 0; i < bs; ++i)
            d_batch.row(i) = real.row(static_cast<Eigen::Index>(batch_rng.index(static_cast<std::size_t>(real.rows()))));
        {
            const Matrix z = detail::gaussian_matrix<Matrix>(bs - n_extra, pair.noise_dim, noise_rng);
            Matrix fake = generator_sample(G, z, opts.normalize_output);
            if (opts.air) {
                Vector amp, g;
                fake = detail::normalize_rows(opts.air->transmit(fake, noise_rng, amp), g);
            }
            d_batch.block(bs, 0, bs - n_extra, real.cols()) = fake;
            for (Eigen::Index i = 0; i < n_extra; ++i)
                d_batch.row(2 * bs - n_extra + i) =
                    extra.row(static_cast<Eigen::Index>(batch_rng.index(static_cast<std::size_t>(extra.rows()))));
            last_fake = std::move(fake);
        }
        const auto dc = forward(D, d_batch, RunMode::Train, &batch_rng);
        const double d_loss = cross_entropy<T>(dc.output, d_labels);
        std::size_t correct = 0;
        for (Eigen::Index r = 0; r < dc.output.rows(); ++r) {
            const int guess = dc.output(r, 1) > dc.output(r, 0) ? 1 : 0;
            correct += guess == d_labels[static_cast<std::size_t>(r)];
        }
        opt_d.step(D, backward(D, dc, softmax_ce_delta<T>(dc.output, d_labels)));

        // Generator step through the (fixed) discriminator.
        const Matrix z = detail::gaussian_matrix<Matrix>(bs, pair.noise_dim, noise_rng);
        const auto gc = forward(G, z, RunMode::Train, &noise_rng);
        Vector gain;
        const Matrix gen = opts.normalize_output ? detail::normalize_rows(gc.output, gain) : gc.output;
        Vector air_amp, air_gain;
        const Matrix seen = opts.air ? detail::normalize_rows(opts.air->transmit(gen, noise_rng, air_amp), air_gain) : gen;
        const auto dg = forward(D, seen, RunMode::Train, &batch_rng);
        const double g_loss = cross_entropy<T>(dg.output, g_labels);
        if (!std::isfinite(d_loss) || !std::isfinite(g_loss))
            throw Error(Errc::non_finite_loss, "GAN loss became non-finite at step " + std::to_string(step));
        Matrix grad_gen;
        backward(D, dg, softmax_ce_delta<T>(dg.output, g_labels), &grad_gen);
        if (opts.air) grad_gen = opts.air->convolve(detail::normalize_rows_backward(seen, air_gain, grad_gen), air_amp, true);
        if (opts.normalize_output) grad_gen = detail::normalize_rows_backward(gen, gain, grad_gen);
        opt_g.step(G, backward(G, gc, output_delta(G, gc, grad_gen)));

        res.discriminator_loss.push_back(d_loss);
        res.generator_loss.push_back(g_loss);
        res.discriminator_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(2 * bs));
    }

    if (last_fake.rows() > 1) {
        const auto mean = last_fake.colwise().mean();
        const double var = (last_fake.rowwise() - mean).array().square().mean();
        res.mode_collapse_warning = var < 1e-6;
    }
    res.pair = std::move(pair);
    return res;
}

/// n generated rows (Eval mode, standard-normal noise), unit average power.
template <std::floating_point T>
MatrixXd generate_spoof(const Mlp<T>& g, RandomStream& rng, std::size_t n) {
    if (g.role != ModelRole::Generator) throw Error(Errc::role_mismatch, "generate_spoof needs a generator");
    if (n == 0) return MatrixXd(0, g.output_size());
    using Matrix = typename Mlp<T>::Matrix;
    const Matrix z = detail::gaussian_matrix<Matrix>(static_cast<Eigen::Index>(n), g.input_size(), rng);
    MatrixXd rows = generator_sample(g, z, false).template cast<double>();
    for (Eigen::Index r = 0; r < rows.rows(); ++r) normalize_iq_row(rows.row(r));
    return rows;
}

}  // namespace aml5g
