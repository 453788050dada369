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

#include "pmimo/core.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace pmimo
{
    /**
     * @brief Discrete frequency grid of a block simulation.
     *
     * Bins are stored in centred order. Bin `k` sits at offset (k - n_bins/2) * spacing from
     * the optical carrier, so bin n_bins/2 is the carrier itself and bin 0 is the lower band
     * edge. In normalised units bin `k` has angular frequency 2*pi*(k - n_bins/2)/n_bins
     * rad/sample; delays derived from that axis are in samples.
     */
    struct FrequencyGrid
    {
        std::size_t n_bins = 4096;
        double symbol_rate_gbd = 33.0;
        int samples_per_symbol = 1;

        double sample_rate_ghz() const { return symbol_rate_gbd * samples_per_symbol; }
        double sample_period_ps() const { return 1e3 / sample_rate_ghz(); }
        double spacing_ghz() const { return sample_rate_ghz() / static_cast<double>(n_bins); }
        std::size_t centre_bin() const { return n_bins / 2; }

        // Offset of bin k from the carrier, GHz.
        double frequency_ghz(std::size_t k) const
        {
            return (static_cast<double>(k) - static_cast<double>(n_bins / 2)) * spacing_ghz();
        }

        // Normalised angular frequency of bin k, rad/sample.
        double omega(std::size_t k) const
        {
            return 2.0 * pi * (static_cast<double>(k) - static_cast<double>(n_bins / 2)) / static_cast<double>(n_bins);
        }

        double omega_step() const { return 2.0 * pi / static_cast<double>(n_bins); }

        void validate() const
        {
            if (!is_power_of_two(n_bins) || n_bins < 4)
                throw config_error("FrequencyGrid: n_bins must be a power of two >= 4, got " + std::to_string(n_bins));
            if (!(symbol_rate_gbd > 0.0))
                throw config_error("FrequencyGrid: symbol rate must be positive");
            if (samples_per_symbol != 1 && samples_per_symbol != 2)
                throw config_error("FrequencyGrid: samples_per_symbol must be 1 or 2");
        }

        bool operator==(const FrequencyGrid &) const = default;
    };

    /// Per-bin complex transfer matrices H(omega_k), rows = outputs, cols = inputs.
    struct ChannelSpectrum
    {
        FrequencyGrid grid;
        std::vector<CMatrix> bins;

        ChannelSpectrum() = default;
        ChannelSpectrum(FrequencyGrid g, std::vector<CMatrix> b) : grid(g), bins(std::move(b)) {}

        static ChannelSpectrum constant(const FrequencyGrid &g, const CMatrix &m)
        {
            return ChannelSpectrum(g, std::vector<CMatrix>(g.n_bins, m));
        }

        static ChannelSpectrum identity(const FrequencyGrid &g, Eigen::Index m)
        {
            return constant(g, CMatrix::Identity(m, m));
        }

        std::size_t n_bins() const { return bins.size(); }
        Eigen::Index rows() const { return bins.empty() ? 0 : bins.front().rows(); }
        Eigen::Index cols() const { return bins.empty() ? 0 : bins.front().cols(); }
        // Mode count of a square spectrum.
        Eigen::Index m() const { return cols(); }

        const CMatrix &operator[](std::size_t k) const { return bins[k]; }
        CMatrix &operator[](std::size_t k) { return bins[k]; }

        /// Mean per-bin Frobenius energy, (1/n) sum_k ||H_k||_F^2.
        double energy() const
        {
            double e = 0.0;
            for (const auto &b : bins)
                e += b.squaredNorm();
            return bins.empty() ? 0.0 : e / static_cast<double>(bins.size());
        }

        void validate() const
        {
            grid.validate();
            if (bins.size() != grid.n_bins)
                throw config_error("ChannelSpectrum: matrix count " + std::to_string(bins.size()) +
                                   " does not match grid size " + std::to_string(grid.n_bins));
            for (const auto &b : bins)
            {
                if (b.rows() != rows() || b.cols() != cols())
                    throw config_error("ChannelSpectrum: inconsistent matrix shapes across bins");
                if (!b.allFinite())
                    throw numerical_error("ChannelSpectrum: non-finite matrix entry");
            }
        }
    };

    /// Per-delay tap matrices. taps[origin_index] is zero delay; tap spacing is one sample.
    struct ImpulseResponse
    {
        std::vector<CMatrix> taps;
        std::size_t origin_index = 0;

        double energy() const
        {
            double e = 0.0;
            for (const auto &t : taps)
                e += t.squaredNorm();
            return e;
        }

        // Signed delay (samples) of tap index n.
        long delay_of(std::size_t n) const { return static_cast<long>(n) - static_cast<long>(origin_index); }
    };

    /**
     * @brief Per-entry IDFT across bins.
     *
     * Taps are rotated so that zero delay lands on index n/2 (origin_index). With the
     * LP01-referenced phase convention of the channel builder, the LP01 path peaks there.
     * Energy is preserved: sum_n ||h[n]||^2 equals ChannelSpectrum::energy().
     */
    inline ImpulseResponse to_impulse_response(const ChannelSpectrum &h)
    {
        h.validate();
        const std::size_t n = h.n_bins();
        const Eigen::Index rows = h.rows(), cols = h.cols();
        ImpulseResponse ir;
        ir.origin_index = n / 2;
        ir.taps.assign(n, CMatrix::Zero(rows, cols));

        Fft fft;
        std::vector<Complex> nat(n);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c)
            {
                for (std::size_t k = 0; k < n; ++k)
                    nat[centred_to_natural(k, n)] = h[k](r, c);
                auto t = fft.inverse(nat);
                // fftshift: delay d goes to index d + n/2.
                for (std::size_t d = 0; d < n; ++d)
                    ir.taps[(d + n / 2) % n](r, c) = t[d];
            }
        return ir;
    }

    /// Multiplies every bin by a real spectral weight (band-limiting before CIR measurement).
    inline ChannelSpectrum weight_spectrum(const ChannelSpectrum &h, const std::vector<double> &w)
    {
        if (w.size() != h.n_bins())
            throw config_error("weight_spectrum: weight count does not match bin count");
        ChannelSpectrum out = h;
        for (std::size_t k = 0; k < h.n_bins(); ++k)
            out[k] *= w[k];
        return out;
    }

    /**
     * @brief Raised-cosine spectral taper with roll-off beta in (0, 1].
     *
     * Unity for |f| <= (1 - beta) f_s / 2, cosine roll-off to zero at the band edges
     * |f| = f_s / 2. beta = 1 is the Hann taper cos^2(pi f / (2 f_s)) over the whole band.
     */
    inline std::vector<double> raised_cosine_taper(const FrequencyGrid &g, double beta = 1.0)
    {
        if (!(beta > 0.0 && beta <= 1.0))
            throw config_error("raised_cosine_taper: roll-off must be in (0, 1]");
        std::vector<double> w(g.n_bins);
        for (std::size_t k = 0; k < g.n_bins; ++k)
        {
            // |omega| / pi in [0, 1]: 1 at the band edge.
            const double x = std::abs(g.omega(k)) / pi;
            if (x <= 1.0 - beta)
                w[k] = 1.0;
            else
            {
                const double c = std::cos(pi / 2.0 * (x - 1.0 + beta) / beta);
                w[k] = c * c;
            }
        }
        return w;
    }

    inline std::vector<double> hann_taper(const FrequencyGrid &g) { return raised_cosine_taper(g, 1.0); }

    /// Scales the spectrum so that the mean per-mode power gain (energy / cols) is one.
    /// Models ideal inline amplification restoring the launch power.
    inline ChannelSpectrum normalize_power(const ChannelSpectrum &h)
    {
        double g = h.energy() / static_cast<double>(h.cols());
        if (!(g > 0.0))
            throw numerical_error("normalize_power: zero-energy spectrum");
        ChannelSpectrum out = h;
        double s = 1.0 / std::sqrt(g);
        for (auto &b : out.bins)
            b *= s;
        return out;
    }

    /// Per-bin product a[k] * b[k].
    inline ChannelSpectrum multiply(const ChannelSpectrum &a, const ChannelSpectrum &b)
    {
        if (a.n_bins() != b.n_bins() || a.cols() != b.rows())
            throw config_error("multiply: incompatible spectra");
        ChannelSpectrum out(a.grid, std::vector<CMatrix>(a.n_bins()));
        for (std::size_t k = 0; k < a.n_bins(); ++k)
            out[k] = a[k] * b[k];
        return out;
    }

    /// Sandwich left^H * H[k] * right with constant matrices.
    inline ChannelSpectrum sandwich(const CMatrix &left, const ChannelSpectrum &h, const CMatrix &right)
    {
        if (left.rows() != h.rows() || right.rows() != h.cols())
            throw config_error("sandwich: matrix dimensions do not match spectrum");
        ChannelSpectrum out(h.grid, std::vector<CMatrix>(h.n_bins()));
        const CMatrix lh = left.adjoint();
        for (std::size_t k = 0; k < h.n_bins(); ++k)
            out[k] = lh * h[k] * right;
        return out;
    }

} // namespace pmimo
