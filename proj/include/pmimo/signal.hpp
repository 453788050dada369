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

#include "pmimo/spectrum.hpp"

namespace pmimo
{
    // Sample offsets of the regions of an assembled frame. Unused regions have length 0.
    struct FrameLayout
    {
        std::size_t prefix_len = 0;
        std::size_t ts_offset = 0;
        std::size_t ts_length = 0;
        std::size_t payload_offset = 0;
        std::size_t payload_length = 0;

        bool operator==(const FrameLayout &) const = default;
    };

    /**
     * @brief Multi-tributary complex baseband samples.
     *
     * samples is (length x T): one column per tributary, all tributaries the same length.
     */
    struct SignalFrame
    {
        CMatrix samples;
        double symbol_rate_gbd = 33.0;
        int samples_per_symbol = 1;
        FrameLayout layout;

        Eigen::Index length() const { return samples.rows(); }
        Eigen::Index tributaries() const { return samples.cols(); }

        // Payload-only frame spanning all samples.
        static SignalFrame from_samples(CMatrix s, double symbol_rate_gbd = 33.0, int sps = 1)
        {
            SignalFrame f;
            f.layout.payload_length = static_cast<std::size_t>(s.rows());
            f.samples = std::move(s);
            f.symbol_rate_gbd = symbol_rate_gbd;
            f.samples_per_symbol = sps;
            return f;
        }

        // Mean power over all samples of tributary t.
        double power(Eigen::Index t) const
        {
            return samples.rows() == 0 ? 0.0 : samples.col(t).squaredNorm() / static_cast<double>(samples.rows());
        }
    };

    namespace detail
    {
        // DFT of each column into centred-order bins.
        inline CMatrix to_centred_spectrum(const CMatrix &time, Fft &fft)
        {
            const auto n = static_cast<std::size_t>(time.rows());
            CMatrix out(time.rows(), time.cols());
            std::vector<Complex> col(n);
            for (Eigen::Index t = 0; t < time.cols(); ++t)
            {
                for (std::size_t i = 0; i < n; ++i)
                    col[i] = time(static_cast<Eigen::Index>(i), t);
                auto f = fft.forward(col);
                for (std::size_t k = 0; k < n; ++k)
                    out(static_cast<Eigen::Index>(k), t) = f[centred_to_natural(k, n)];
            }
            return out;
        }

        inline CMatrix from_centred_spectrum(const CMatrix &freq, Fft &fft)
        {
            const auto n = static_cast<std::size_t>(freq.rows());
            CMatrix out(freq.rows(), freq.cols());
            std::vector<Complex> col(n);
            for (Eigen::Index t = 0; t < freq.cols(); ++t)
            {
                for (std::size_t k = 0; k < n; ++k)
                    col[centred_to_natural(k, n)] = freq(static_cast<Eigen::Index>(k), t);
                auto x = fft.inverse(col);
                for (std::size_t i = 0; i < n; ++i)
                    out(static_cast<Eigen::Index>(i), t) = x[i];
            }
            return out;
        }
    } // namespace detail

    /**
     * @brief Block (circular) application of a frequency-dependent channel.
     *
     * The frame length must equal the grid size; the per-bin product is an exact circular
     * convolution, so cyclic extension is the caller's responsibility. Output tributary count
     * is h.rows(). Layout and rate metadata are carried over.
     */
    inline SignalFrame apply_spectrum(const ChannelSpectrum &h, const SignalFrame &frame)
    {
        if (static_cast<std::size_t>(frame.length()) != h.n_bins())
            throw config_error("apply_spectrum: frame length " + std::to_string(frame.length()) +
                               " does not match grid size " + std::to_string(h.n_bins()));
        if (frame.tributaries() != h.cols())
            throw config_error("apply_spectrum: matrix has " + std::to_string(h.cols()) + " inputs, frame has " +
                               std::to_string(frame.tributaries()) + " tributaries");
        Fft fft;
        CMatrix x = detail::to_centred_spectrum(frame.samples, fft);
        CMatrix y(x.rows(), h.rows());
        for (std::size_t k = 0; k < h.n_bins(); ++k)
        {
            auto kk = static_cast<Eigen::Index>(k);
            y.row(kk) = (h[k] * x.row(kk).transpose()).transpose();
        }
        SignalFrame out = frame;
        out.samples = detail::from_centred_spectrum(y, fft);
        return out;
    }

    /// Constant-matrix variant: identical multiply at every bin, done in the time domain.
    inline SignalFrame apply_spectrum(const CMatrix &m, const SignalFrame &frame)
    {
        if (frame.tributaries() != m.cols())
            throw config_error("apply_spectrum: matrix has " + std::to_string(m.cols()) + " inputs, frame has " +
                               std::to_string(frame.tributaries()) + " tributaries");
        SignalFrame out = frame;
        out.samples = frame.samples * m.transpose();
        return out;
    }

} // namespace pmimo
