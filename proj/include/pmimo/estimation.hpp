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
#include <span>
#include <vector>

namespace pmimo
{
    /**
     * @brief Frequency-comb training sequences, one per tributary.
     *
     * Tributary p is non-zero only at natural DFT indices k = p + l*m, where it carries the
     * shared BPSK sequence C[k] = +-1. Pilot sets of different tributaries are disjoint. When m
     * does not divide the length, tributaries p < length % m get one extra pilot.
     *
     * time_domain column p is scaled to unit mean power: time_domain = tx_scale[p] * IDFT'(S_p)
     * with IDFT' the unnormalised inverse sum. Hence DFT(time_domain_p)[k] = length * tx_scale[p] * S_p[k].
     */
    struct TrainingSequenceSet
    {
        std::size_t m = 0;
        std::size_t length = 0;
        std::size_t prefix_len = 0;
        CMatrix freq_domain;  // length x m, natural DFT order
        CMatrix time_domain;  // length x m
        std::vector<double> tx_scale;

        bool is_pilot(std::size_t k, std::size_t p) const { return k % m == p; }

        std::vector<std::size_t> pilot_bins(std::size_t p) const
        {
            std::vector<std::size_t> out;
            for (std::size_t k = p; k < length; k += m)
                out.push_back(k);
            return out;
        }
    };

    inline TrainingSequenceSet generate_training_set(std::size_t m, std::size_t length, std::size_t prefix_len,
                                                     std::uint64_t seed)
    {
        if (m < 1)
            throw config_error("generate_training_set: tributary count must be >= 1");
        if (length < m)
            throw config_error("generate_training_set: length " + std::to_string(length) +
                               " shorter than tributary count " + std::to_string(m));
        if (prefix_len >= length)
            throw config_error("generate_training_set: prefix must be shorter than the sequence");

        TrainingSequenceSet ts;
        ts.m = m;
        ts.length = length;
        ts.prefix_len = prefix_len;
        const auto n = static_cast<Eigen::Index>(length);
        const auto mm = static_cast<Eigen::Index>(m);

        Rng rng(seed);
        std::bernoulli_distribution coin(0.5);
        std::vector<double> c(length);
        for (auto &v : c)
            v = coin(rng) ? 1.0 : -1.0;

        ts.freq_domain = CMatrix::Zero(n, mm);
        for (std::size_t k = 0; k < length; ++k)
            ts.freq_domain(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k % m)) = c[k];

        ts.time_domain.resize(n, mm);
        ts.tx_scale.resize(m);
        Fft fft;
        std::vector<Complex> col(length);
        for (std::size_t p = 0; p < m; ++p)
        {
            for (std::size_t k = 0; k < length; ++k)
                col[k] = ts.freq_domain(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
            auto x = fft.inverse(col);  // (1/L) sum
            const double pilots = static_cast<double>(ts.pilot_bins(p).size());
            // mean |IDFT'(S)|^2 = pilots, so scale 1/sqrt(pilots) gives unit power.
            ts.tx_scale[p] = 1.0 / std::sqrt(pilots);
            const double s = static_cast<double>(length) * ts.tx_scale[p];
            for (std::size_t i = 0; i < length; ++i)
                ts.time_domain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = s * x[i];
        }
        return ts;
    }

    /**
     * @brief Frame = [cyclic prefix | TS | cyclic suffix | payload].
     *
     * Prefix is the last prefix_len TS samples, suffix the first prefix_len samples.
     */
    inline SignalFrame assemble_frame(const TrainingSequenceSet &ts, const SignalFrame &payload)
    {
        if (payload.tributaries() != static_cast<Eigen::Index>(ts.m) && payload.length() > 0)
            throw config_error("assemble_frame: payload has " + std::to_string(payload.tributaries()) +
                               " tributaries, training set has " + std::to_string(ts.m));
        if (ts.prefix_len >= ts.length)
            throw config_error("assemble_frame: prefix must be shorter than the sequence");
        const auto p = static_cast<Eigen::Index>(ts.prefix_len);
        const auto l = static_cast<Eigen::Index>(ts.length);
        const auto m = static_cast<Eigen::Index>(ts.m);
        const Eigen::Index total = l + 2 * p + payload.length();

        SignalFrame f;
        f.symbol_rate_gbd = payload.symbol_rate_gbd;
        f.samples_per_symbol = payload.samples_per_symbol;
        f.samples.resize(total, m);
        if (p > 0)
        {
            f.samples.topRows(p) = ts.time_domain.bottomRows(p);
            f.samples.middleRows(p + l, p) = ts.time_domain.topRows(p);
        }
        f.samples.middleRows(p, l) = ts.time_domain;
        if (payload.length() > 0)
            f.samples.bottomRows(payload.length()) = payload.samples;

        f.layout.prefix_len = ts.prefix_len;
        f.layout.ts_offset = ts.prefix_len;
        f.layout.ts_length = ts.length;
        f.layout.payload_offset = ts.length + 2 * ts.prefix_len;
        f.layout.payload_length = static_cast<std::size_t>(payload.length());
        return f;
    }

    /// Origin of each bin/column value of a ChannelEstimate.
    enum class Provenance : std::uint8_t
    {
        unmeasured,
        measured,
        interpolated,
        extrapolated,
    };

    /**
     * @brief Channel estimate in ChannelSpectrum layout (centred bins) plus provenance.
     *
     * Pilot positions depend only on the transmit tributary, so provenance is tracked per
     * (bin, column): provenance[k * cols + j].
     */
    struct ChannelEstimate
    {
        ChannelSpectrum spectrum;
        std::vector<Provenance> provenance;

        Provenance at(std::size_t k, Eigen::Index col) const
        {
            return provenance[k * static_cast<std::size_t>(spectrum.cols()) + static_cast<std::size_t>(col)];
        }
        Provenance &at(std::size_t k, Eigen::Index col)
        {
            return provenance[k * static_cast<std::size_t>(spectrum.cols()) + static_cast<std::size_t>(col)];
        }

        bool complete() const
        {
            for (auto p : provenance)
                if (p == Provenance::unmeasured)
                    return false;
            return true;
        }
    };

    /**
     * @brief LS pilot estimate H_ij[k] = R_i[k] / S_j[k] at the pilot bins of tributary j.
     *
     * The TS region is located from received.layout (ideal synchronisation). Its length must
     * equal the grid size. Non-pilot bins are left zero and marked unmeasured.
     */
    inline ChannelEstimate ls_estimate(const SignalFrame &received, const TrainingSequenceSet &ts,
                                       const FrequencyGrid &grid)
    {
        if (received.layout.ts_length != ts.length)
            throw config_error("ls_estimate: frame TS region does not match the training set length");
        if (ts.length != grid.n_bins)
            throw config_error("ls_estimate: training length must equal the grid size");
        if (received.layout.ts_offset + ts.length > static_cast<std::size_t>(received.length()))
            throw config_error("ls_estimate: frame shorter than its TS region");

        const std::size_t n = ts.length;
        const Eigen::Index rx = received.tributaries();
        const auto tx = static_cast<Eigen::Index>(ts.m);
        Fft fft;
        CMatrix spectrum = detail::to_centred_spectrum(
            received.samples.middleRows(static_cast<Eigen::Index>(received.layout.ts_offset), static_cast<Eigen::Index>(n)),
            fft);

        ChannelEstimate est;
        est.spectrum = ChannelSpectrum(grid, std::vector<CMatrix>(n, CMatrix::Zero(rx, tx)));
        est.provenance.assign(n * static_cast<std::size_t>(tx), Provenance::unmeasured);
        for (std::size_t kn = 0; kn < n; ++kn)
        {
            const auto j = static_cast<Eigen::Index>(kn % ts.m);
            const Complex s = ts.freq_domain(static_cast<Eigen::Index>(kn), j) * ts.tx_scale[static_cast<std::size_t>(j)] *
                              static_cast<double>(n);
            if (std::abs(s) == 0.0)
                throw numerical_error("ls_estimate: zero-valued pilot");
            const std::size_t kc = natural_to_centred(kn, n);
            for (Eigen::Index i = 0; i < rx; ++i)
                est.spectrum[kc](i, j) = spectrum(static_cast<Eigen::Index>(kc), i) / s;
            est.at(kc, j) = Provenance::measured;
        }
        return est;
    }

    /**
     * @brief Fills unmeasured bins per (i, j) entry.
     *
     * Interior bins: complex linear interpolation between the nearest measured bins of the
     * same column. Bins outside the outermost pilots: nearest-pilot hold.
     */
    inline ChannelEstimate interpolate_extrapolate(const ChannelEstimate &partial)
    {
        const std::size_t n = partial.spectrum.n_bins();
        const Eigen::Index cols = partial.spectrum.cols();
        ChannelEstimate out = partial;
        for (Eigen::Index j = 0; j < cols; ++j)
        {
            std::vector<std::size_t> known;
            for (std::size_t k = 0; k < n; ++k)
                if (partial.at(k, j) != Provenance::unmeasured)
                    known.push_back(k);
            if (known.size() < 2)
                throw numerical_error("interpolate_extrapolate: column " + std::to_string(j) +
                                      " has fewer than 2 measured bins");
            if (known.size() == n)
                continue;

            for (std::size_t k = 0; k < known.front(); ++k)
            {
                out.spectrum[k].col(j) = partial.spectrum[known.front()].col(j);
                out.at(k, j) = Provenance::extrapolated;
            }
            for (std::size_t k = known.back() + 1; k < n; ++k)
            {
                out.spectrum[k].col(j) = partial.spectrum[known.back()].col(j);
                out.at(k, j) = Provenance::extrapolated;
            }
            for (std::size_t q = 0; q + 1 < known.size(); ++q)
            {
                const std::size_t a = known[q], b = known[q + 1];
                for (std::size_t k = a + 1; k < b; ++k)
                {
                    const double t = static_cast<double>(k - a) / static_cast<double>(b - a);
                    out.spectrum[k].col(j) = (1.0 - t) * partial.spectrum[a].col(j) + t * partial.spectrum[b].col(j);
                    out.at(k, j) = Provenance::interpolated;
                }
            }
        }
        return out;
    }

    /// Per-bin arithmetic mean of estimates sharing grid, shape and provenance.
    inline ChannelEstimate average_estimates(std::span<const ChannelEstimate> estimates)
    {
        if (estimates.empty())
            throw config_error("average_estimates: empty list");
        const auto &first = estimates.front();
        ChannelEstimate out = first;
        for (std::size_t e = 1; e < estimates.size(); ++e)
        {
            const auto &x = estimates[e];
            if (!(x.spectrum.grid == first.spectrum.grid) || x.spectrum.n_bins() != first.spectrum.n_bins() ||
                x.spectrum.rows() != first.spectrum.rows() || x.spectrum.cols() != first.spectrum.cols())
                throw config_error("average_estimates: mismatched shapes");
            if (x.provenance != first.provenance)
                throw config_error("average_estimates: mismatched provenance masks");
            for (std::size_t k = 0; k < out.spectrum.n_bins(); ++k)
                out.spectrum[k] += x.spectrum[k];
        }
        const double inv = 1.0 / static_cast<double>(estimates.size());
        for (auto &b : out.spectrum.bins)
            b *= inv;
        return out;
    }

} // namespace pmimo
