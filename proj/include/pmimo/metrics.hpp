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

#include <vector>

namespace pmimo
{
    /// Intensity impulse response summed over all mode pairs, peak-normalised to 1.
    struct CirProfile
    {
        std::vector<double> values;
        std::size_t origin_index = 0;

        std::size_t size() const { return values.size(); }
    };

    inline CirProfile integrated_cir(const ImpulseResponse &ir)
    {
        CirProfile p;
        p.origin_index = ir.origin_index;
        p.values.reserve(ir.taps.size());
        double peak = 0.0;
        for (const auto &t : ir.taps)
        {
            p.values.push_back(t.squaredNorm());
            peak = std::max(peak, p.values.back());
        }
        if (!(peak > 0.0))
            throw numerical_error("integrated_cir: all-zero impulse response");
        for (auto &v : p.values)
            v /= peak;
        return p;
    }

    /// CIR of a spectrum after a raised-cosine band taper with the given roll-off.
    inline CirProfile tapered_cir(const ChannelSpectrum &h, double rolloff = 1.0)
    {
        return integrated_cir(to_impulse_response(weight_spectrum(h, raised_cosine_taper(h.grid, rolloff))));
    }

    struct MemoryWindow
    {
        std::size_t begin = 0;
        std::size_t length = 0;
    };

    /**
     * @brief Smallest contiguous window holding at least energy_fraction of the total.
     *
     * Window sums are prefix-sum differences. Among windows of minimal length the earliest wins.
     */
    inline MemoryWindow memory_window(const CirProfile &cir, double energy_fraction = 0.999)
    {
        if (!(energy_fraction > 0.0 && energy_fraction < 1.0))
            throw config_error("channel_memory: energy fraction must be in (0, 1)");
        const std::size_t n = cir.values.size();
        if (n == 0)
            throw config_error("channel_memory: empty profile");
        std::vector<double> prefix(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            prefix[i + 1] = prefix[i] + cir.values[i];
        const double target = energy_fraction * prefix[n];

        MemoryWindow best{0, n};
        std::size_t lo = 0;
        for (std::size_t hi = 1; hi <= n; ++hi)
        {
            if (prefix[hi] - prefix[lo] < target)
                continue;
            while (lo + 1 < hi && prefix[hi] - prefix[lo + 1] >= target)
                ++lo;
            if (hi - lo < best.length)
                best = {lo, hi - lo};
        }
        return best;
    }

    inline std::size_t channel_memory(const CirProfile &cir, double energy_fraction = 0.999)
    {
        return memory_window(cir, energy_fraction).length;
    }

    /// channel_memory(raw) / channel_memory(residual).
    inline double compression_ratio(const CirProfile &raw, const CirProfile &residual, double energy_fraction = 0.999)
    {
        const std::size_t r = channel_memory(residual, energy_fraction);
        if (r == 0)
            throw numerical_error("compression_ratio: zero residual memory");
        return static_cast<double>(channel_memory(raw, energy_fraction)) / static_cast<double>(r);
    }

} // namespace pmimo
