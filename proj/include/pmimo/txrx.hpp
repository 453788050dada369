// SPDX-License-Identifier: Apache-2.0
//
// pmimo - principal-modes MIMO simulation for multimode fibre links
// Copyright (C) 2026 The pmimo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#pragma once

#include "pmimo/signal.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace pmimo
{
    // ---- QAM ---------------------------------------------------------------------------------

    namespace detail
    {
        inline int qam_bits_per_axis(int order)
        {
            switch (order)
            {
            case 4: return 1;
            case 16: return 2;
            case 64: return 3;
            default: throw config_error("qam: unsupported order " + std::to_string(order) + " (4, 16 or 64)");
            }
        }

        inline double qam_norm(int order) { return std::sqrt(2.0 * (order - 1) / 3.0); }

        inline unsigned gray_to_binary(unsigned g)
        {
            for (unsigned s = g >> 1; s; s >>= 1)
                g ^= s;
            return g;
        }
    } // namespace detail

    /**
     * @brief Gray-coded square QAM with unit mean symbol energy.
     *
     * Each symbol consumes log2(order) bits, MSB first: the first half selects the in-phase
     * level, the second half the quadrature level. A Gray word g maps to level index
     * gray_to_binary(g) and amplitude 2*index - (sqrt(order) - 1). All-zero bits therefore map
     * to the corner point -(sqrt(order) - 1) * (1 + j) / sqrt(2 (order - 1) / 3).
     */
    inline std::vector<Complex> qam_map(std::span<const std::uint8_t> bits, int order = 16)
    {
        const int b = detail::qam_bits_per_axis(order);
        const auto per_symbol = static_cast<std::size_t>(2 * b);
        if (bits.size() % per_symbol != 0)
            throw config_error("qam_map: bit count " + std::to_string(bits.size()) + " not divisible by " +
                               std::to_string(per_symbol));
        const double side = std::sqrt(static_cast<double>(order)) - 1.0;
        const double norm = detail::qam_norm(order);
        std::vector<Complex> out(bits.size() / per_symbol);
        for (std::size_t s = 0; s < out.size(); ++s)
        {
            unsigned gi = 0, gq = 0;
            for (int i = 0; i < b; ++i)
            {
                gi = (gi << 1) | (bits[s * per_symbol + static_cast<std::size_t>(i)] & 1u);
                gq = (gq << 1) | (bits[s * per_symbol + static_cast<std::size_t>(b + i)] & 1u);
            }
            const double re = 2.0 * detail::gray_to_binary(gi) - side;
            const double im = 2.0 * detail::gray_to_binary(gq) - side;
            out[s] = Complex(re, im) / norm;
        }
        return out;
    }

    /// Nearest-neighbour hard decision, inverse of qam_map.
    inline std::vector<std::uint8_t> qam_demap(std::span<const Complex> symbols, int order = 16)
    {
        const int b = detail::qam_bits_per_axis(order);
        const int levels = 1 << b;
        const double side = levels - 1.0;
        const double norm = detail::qam_norm(order);
        auto level = [&](double x) {
            const double idx = std::round((x * norm + side) / 2.0);
            return static_cast<unsigned>(std::clamp(idx, 0.0, side));
        };
        std::vector<std::uint8_t> out;
        out.reserve(symbols.size() * static_cast<std::size_t>(2 * b));
        for (const Complex &z : symbols)
        {
            const unsigned li = level(z.real()), lq = level(z.imag());
            const unsigned gi = li ^ (li >> 1), gq = lq ^ (lq >> 1);
            for (int i = b - 1; i >= 0; --i)
                out.push_back(static_cast<std::uint8_t>((gi >> i) & 1u));
            for (int i = b - 1; i >= 0; --i)
                out.push_back(static_cast<std::uint8_t>((gq >> i) & 1u));
        }
        return out;
    }

    /// Uniform random bits.
    inline std::vector<std::uint8_t> random_bits(std::size_t count, std::uint64_t seed)
    {
        Rng rng(seed);
        std::vector<std::uint8_t> out(count);
        for (std::size_t i = 0; i < count; i += 64)
        {
            std::uint64_t w = rng();
            for (std::size_t k = i; k < std::min(count, i + 64); ++k, w >>= 1)
                out[k] = static_cast<std::uint8_t>(w & 1u);
        }
        return out;
    }

    /// length x tributaries matrix of random QAM symbols.
    inline CMatrix random_qam_block(Eigen::Index length, Eigen::Index tributaries, int order, std::uint64_t seed)
    {
        const auto per = static_cast<std::size_t>(2 * detail::qam_bits_per_axis(order));
        const auto bits = random_bits(static_cast<std::size_t>(length * tributaries) * per, seed);
        const auto sym = qam_map(bits, order);
        CMatrix out(length, tributaries);
        for (Eigen::Index t = 0; t < tributaries; ++t)
            for (Eigen::Index i = 0; i < length; ++i)
                out(i, t) = sym[static_cast<std::size_t>(t * length + i)];
        return out;
    }

    // ---- Noise -------------------------------------------------------------------------------

    enum class NoisePlacement
    {
        post_demux,  // per detected tributary after the demultiplexer
        pre_demux,   // per fibre output mode before the demultiplexer
    };

    struct LinkConfig
    {
        double osnr_db = std::numeric_limits<double>::infinity();  // +inf: noiseless
        double reference_bandwidth_ghz = 12.5;
        double symbol_rate_gbd = 33.0;
        std::size_t tributaries = 12;
        int qam_order = 16;
        NoisePlacement noise = NoisePlacement::post_demux;
        std::uint64_t seed = 1;

        void validate(std::size_t modes = 12) const
        {
            if (!(reference_bandwidth_ghz > 0.0))
                throw config_error("LinkConfig: reference bandwidth must be positive");
            if (!(symbol_rate_gbd > 0.0))
                throw config_error("LinkConfig: symbol rate must be positive");
            if (tributaries < 1 || tributaries > modes)
                throw config_error("LinkConfig: tributaries must be in [1, " + std::to_string(modes) + "]");
            if (std::isnan(osnr_db))
                throw config_error("LinkConfig: OSNR is NaN");
            detail::qam_bits_per_axis(qam_order);
        }
    };

    /// Per-tributary in-band SNR implied by an OSNR: osnr + 10 log10(B_ref / R_s).
    inline double theory_snr(double osnr_db, const LinkConfig &cfg = {})
    {
        return osnr_db + 10.0 * std::log10(cfg.reference_bandwidth_ghz / cfg.symbol_rate_gbd);
    }

    /// Noise variance relative to unit signal power at the given OSNR.
    inline double noise_variance(double osnr_db, const LinkConfig &cfg = {})
    {
        if (std::isinf(osnr_db) && osnr_db > 0)
            return 0.0;
        return std::pow(10.0, -theory_snr(osnr_db, cfg) / 10.0);
    }

    /**
     * @brief Adds circular complex Gaussian noise at cfg.osnr_db to every tributary.
     *
     * The variance 10^(-theory_snr/10) is referenced to unit signal power; the frame's mean
     * tributary power must be 1 within 1 dB. An infinite OSNR returns the frame unchanged.
     */
    inline SignalFrame add_awgn_for_osnr(const SignalFrame &frame, const LinkConfig &cfg, std::uint64_t seed)
    {
        const double var = noise_variance(cfg.osnr_db, cfg);
        if (var == 0.0 || frame.length() == 0)
            return frame;
        double p = 0.0;
        for (Eigen::Index t = 0; t < frame.tributaries(); ++t)
            p += frame.power(t);
        p /= static_cast<double>(std::max<Eigen::Index>(frame.tributaries(), 1));
        if (!(p > 0.79 && p < 1.26))
            throw config_error("add_awgn_for_osnr: mean tributary power " + std::to_string(p) +
                               " is not normalised to 1");
        SignalFrame out = frame;
        for (Eigen::Index t = 0; t < frame.tributaries(); ++t)
        {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
            for (Eigen::Index i = 0; i < frame.length(); ++i)
                out.samples(i, t) += complex_gaussian(rng, var);
        }
        return out;
    }

    // ---- Equalisation ------------------------------------------------------------------------

    struct EqualizerTaps
    {
        ChannelSpectrum w;
        double design_snr = 0.0;  // linear
    };

    /// Per-bin linear MMSE W = (H^H H + I / snr)^{-1} H^H. design_snr is linear; +inf gives ZF.
    inline EqualizerTaps mmse_taps(const ChannelSpectrum &residual, double design_snr)
    {
        if (!(design_snr > 0.0))
            throw config_error("mmse_taps: design SNR must be positive");
        const double reg = std::isinf(design_snr) ? 0.0 : 1.0 / design_snr;
        EqualizerTaps taps;
        taps.design_snr = design_snr;
        taps.w = ChannelSpectrum(residual.grid, std::vector<CMatrix>(residual.n_bins()));
        const Eigen::Index c = residual.cols();
        for (std::size_t k = 0; k < residual.n_bins(); ++k)
        {
            const CMatrix &h = residual[k];
            const CMatrix a = h.adjoint() * h + reg * CMatrix::Identity(c, c);
            taps.w[k] = a.partialPivLu().solve(h.adjoint());
            if (!taps.w[k].allFinite())
                throw numerical_error("mmse_taps: singular system at bin " + std::to_string(k));
        }
        return taps;
    }

    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

    /// Per-bin multiply by W[k] over one block.
    inline SignalFrame equalize(const SignalFrame &frame, const EqualizerTaps &taps)
    {
        return apply_spectrum(taps.w, frame);
    }

    // ---- Constellation SNR -------------------------------------------------------------------

    inline constexpr double snr_cap_db = 60.0;

    struct SnrReport
    {
        std::vector<double> per_tributary;  // dB
        double average = 0.0;               // mean of per-tributary dB values
    };

    /// 10 log10(mean |X|^2 / mean |X - Y|^2) per column, capped at snr_cap_db.
    inline SnrReport constellation_snr(const CMatrix &x, const CMatrix &y)
    {
        if (x.rows() != y.rows() || x.cols() != y.cols())
            throw config_error("constellation_snr: shape mismatch");
        if (x.rows() < 1 || x.cols() < 1)
            throw config_error("constellation_snr: empty input");
        SnrReport r;
        for (Eigen::Index t = 0; t < x.cols(); ++t)
        {
            const double ps = x.col(t).squaredNorm();
            const double pe = (x.col(t) - y.col(t)).squaredNorm();
            double db = snr_cap_db;
            if (pe > 0.0)
                db = std::min(snr_cap_db, 10.0 * std::log10(ps / pe));
            r.per_tributary.push_back(db);
            r.average += db;
        }
        r.average /= static_cast<double>(x.cols());
        return r;
    }

} // namespace pmimo
