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

#include <Eigen/Eigenvalues>

#include <cctype>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace pmimo
{
    // ---- Fibre description -----------------------------------------------------------------

    struct LPModeParams
    {
        std::string label;         // "01", "11a", ...
        double attenuation_db_km;  // >= 0
        double dmd_ps_km;          // relative to LP01
        double cd_ps_nm_km;        // chromatic dispersion

        bool operator==(const LPModeParams &) const = default;
    };

    /// Measured LP-mode parameters of the reference 6-LP-mode (12 spatial/pol. mode) fibre.
    inline std::vector<LPModeParams> reference_lp_modes()
    {
        return {
            {"01", 0.1913, 0.0, 22.1761},
            {"02", 0.1747, -10.5358, 21.5473},
            {"11a", 0.1830, -1.4619, 22.1516},
            {"11b", 0.1830, -1.4619, 22.1516},
            {"21a", 0.1747, 10.2386, 21.8434},
            {"21b", 0.1747, 10.2686, 21.8434},
        };
    }

    // Default amplitude ratio of inter-group to intra-group coupling, see FiberSpec.
    inline constexpr double default_inter_group_coupling = 0.017;

    struct FiberSpec
    {
        std::vector<LPModeParams> lp_modes = reference_lp_modes();
        double length_km = 50.0;
        int sections = 50;
        // Integrated crosstalk of a 1-km section, dB/km. -infinity disables coupling.
        double xt_db_per_km = -20.0;
        double center_wavelength_nm = 1550.0;
        // Coupling amplitude between modes of different LP groups relative to modes of the
        // same group (pol. pair and a/b degenerate pair). 1.0 gives uniform coupling.
        double inter_group_coupling = default_inter_group_coupling;

        bool crosstalk_enabled() const { return std::isfinite(xt_db_per_km); }
        double section_length_km() const { return length_km / sections; }
        std::size_t mode_count() const { return 2 * lp_modes.size(); }

        void validate() const
        {
            if (lp_modes.empty())
                throw config_error("FiberSpec: empty lp_modes list");
            if (!(length_km > 0.0))
                throw config_error("FiberSpec: length must be positive");
            if (sections < 1)
                throw config_error("FiberSpec: sections must be >= 1");
            if (!(center_wavelength_nm > 0.0))
                throw config_error("FiberSpec: centre wavelength must be positive");
            if (!(inter_group_coupling >= 0.0))
                throw config_error("FiberSpec: inter_group_coupling must be >= 0");
            if (crosstalk_enabled() && xt_db_per_km >= 0.0)
                throw config_error("FiberSpec: integrated crosstalk must be negative dB/km");
            if (std::isnan(xt_db_per_km) || xt_db_per_km == std::numeric_limits<double>::infinity())
                throw config_error("FiberSpec: invalid integrated crosstalk");
            for (const auto &lp : lp_modes)
            {
                if (!(lp.attenuation_db_km >= 0.0))
                    throw config_error("FiberSpec: negative attenuation for LP" + lp.label);
                if (lp.label == "01" && lp.dmd_ps_km != 0.0)
                    throw config_error("FiberSpec: LP01 DMD must be exactly 0");
            }
        }
    };

    /// Scalar propagation parameters of one expanded (spatial x polarisation) mode.
    struct ModeParams
    {
        std::string label;  // e.g. "11a.x"
        std::string group;  // LP group, e.g. "11"
        double attenuation_db_km;
        double dmd_ps_km;
        double cd_ps_nm_km;
    };

    /// LP group of a label: trailing degeneracy letters are dropped ("11a" -> "11").
    inline std::string lp_group(const std::string &label)
    {
        std::string g = label;
        while (!g.empty() && std::isalpha(static_cast<unsigned char>(g.back())))
            g.pop_back();
        return g;
    }

    /**
     * @brief Expands LP modes to M = 2 x |lp_modes| scalar modes.
     *
     * Order is stable: LP entry i becomes entries 2i (pol. x) and 2i+1 (pol. y), both with the
     * LP entry's attenuation, DMD and CD.
     */
    inline std::vector<ModeParams> expand_lp_to_full_modes(const FiberSpec &spec)
    {
        if (spec.lp_modes.empty())
            throw config_error("expand_lp_to_full_modes: empty lp_modes list");
        std::vector<ModeParams> out;
        out.reserve(spec.mode_count());
        for (const auto &lp : spec.lp_modes)
            for (const char *pol : {"x", "y"})
                out.push_back({lp.label + "." + pol, lp_group(lp.label), lp.attenuation_db_km, lp.dmd_ps_km,
                               lp.cd_ps_nm_km});
        return out;
    }

    // ---- Physical constants / conversions ---------------------------------------------------

    inline constexpr double speed_of_light_nm_per_ps = 299792.458;

    /// beta2 in ps^2/km from dispersion D in ps/(nm km): beta2 = -D lambda^2 / (2 pi c).
    inline double beta2_ps2_per_km(double cd_ps_nm_km, double wavelength_nm)
    {
        return -cd_ps_nm_km * wavelength_nm * wavelength_nm / (2.0 * pi * speed_of_light_nm_per_ps);
    }

    // ---- Random mode coupling --------------------------------------------------------------

    /// Amplitude weight of each mode pair: 1 within an LP group, inter_group_coupling across.
    inline Eigen::MatrixXd coupling_weights(const FiberSpec &spec)
    {
        auto modes = expand_lp_to_full_modes(spec);
        const auto m = static_cast<Eigen::Index>(modes.size());
        Eigen::MatrixXd w(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b)
                w(a, b) = modes[a].group == modes[b].group ? 1.0 : spec.inter_group_coupling;
        return w;
    }

    /// exp(jA) for Hermitian A via its eigendecomposition.
    inline CMatrix unitary_exp(const CMatrix &hermitian)
    {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian);
        if (es.info() != Eigen::Success)
            throw numerical_error("unitary_exp: eigensolver failed");
        CVector phase = (iu * es.eigenvalues().cast<Complex>()).array().exp();
        return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
    }

    /// Random unitary e^{jA}: A Hermitian, zero diagonal, off-diagonal entries circular
    /// Gaussian with E|A_ab|^2 = (kappa * w_ab)^2.
    inline CMatrix draw_coupling_matrix(Rng &rng, double kappa, const Eigen::MatrixXd &weights)
    {
        const Eigen::Index m = weights.rows();
        CMatrix a = CMatrix::Zero(m, m);
        for (Eigen::Index r = 0; r < m; ++r)
            for (Eigen::Index c = r + 1; c < m; ++c)
            {
                Complex z = complex_gaussian(rng, 1.0) * (kappa * weights(r, c));
                a(r, c) = z;
                a(c, r) = std::conj(z);
            }
        return unitary_exp(a);
    }

    /// Off-diagonal share of total power of a square matrix.
    inline double off_diagonal_fraction(const CMatrix &c)
    {
        double total = c.squaredNorm();
        double diag = c.diagonal().squaredNorm();
        return total > 0.0 ? (total - diag) / total : 0.0;
    }

    inline constexpr std::uint64_t calibration_seed = 0x6d6d66706d73ULL;
    inline constexpr int calibration_trials = 400;

    namespace detail
    {
        inline double mean_off_diagonal_fraction(double kappa, const Eigen::MatrixXd &w, std::uint64_t seed, int trials)
        {
            Rng rng(seed);
            double acc = 0.0;
            for (int t = 0; t < trials; ++t)
                acc += off_diagonal_fraction(draw_coupling_matrix(rng, kappa, w));
            return acc / trials;
        }
    } // namespace detail

    /**
     * @brief Coupling strength kappa of a 1-km section meeting the integrated crosstalk target.
     *
     * Bisection on the Monte-Carlo mean off-diagonal power fraction. Every evaluation reuses
     * the same random stream, so the objective is a smooth, deterministic function of kappa.
     * Sections of length dz use kappa * sqrt(dz).
     */
    inline double calibrate_coupling_strength(const FiberSpec &spec, std::uint64_t seed = calibration_seed,
                                              int trials = calibration_trials)
    {
        spec.validate();
        if (trials < 10)
            throw config_error("calibrate_coupling_strength: trials must be >= 10");
        if (!spec.crosstalk_enabled())
            return 0.0;
        const double target = std::pow(10.0, spec.xt_db_per_km / 10.0);
        const auto w = coupling_weights(spec);

        double lo = 0.0, hi = 0.1;
        int expand = 0;
        while (detail::mean_off_diagonal_fraction(hi, w, seed, trials) < target)
        {
            lo = hi;
            hi *= 2.0;
            if (++expand > 12)
                throw numerical_error("calibrate_coupling_strength: crosstalk target " +
                                      std::to_string(spec.xt_db_per_km) + " dB/km is not reachable");
        }
        for (int it = 0; it < 200; ++it)
        {
            double mid = 0.5 * (lo + hi);
            if (detail::mean_off_diagonal_fraction(mid, w, seed, trials) < target)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-9 * hi)
                return 0.5 * (lo + hi);
        }
        throw numerical_error("calibrate_coupling_strength: bisection did not converge");
    }

    // ---- Channel synthesis -----------------------------------------------------------------

    /// Worst-case delay spread of the uncoupled propagation, in samples: DMD span plus the
    /// chromatic-dispersion spread across the simulated band.
    inline double propagation_delay_spread_samples(const FiberSpec &spec, const FrequencyGrid &grid)
    {
        auto modes = expand_lp_to_full_modes(spec);
        double lo = 0.0, hi = 0.0, b2max = 0.0;
        for (const auto &m : modes)
        {
            lo = std::min(lo, m.dmd_ps_km);
            hi = std::max(hi, m.dmd_ps_km);
            b2max = std::max(b2max, std::abs(beta2_ps2_per_km(m.cd_ps_nm_km, spec.center_wavelength_nm)));
        }
        const double ts = grid.sample_period_ps();
        return (hi - lo) * spec.length_km / ts + 2.0 * pi * b2max * spec.length_km / (ts * ts);
    }

    /**
     * @brief Multi-section MMF transfer matrix H(omega) = prod_s C_s D_s(omega).
     *
     * D_s is diagonal with amplitude 10^(-alpha dz / 20) and phase
     * -omega * dmd * dz + 0.5 * beta2 * dz * omega^2 (omega relative to the carrier), C_s is a
     * random unitary coupling matrix drawn from `seed`. Group delays are referenced to LP01.
     * Throws config_error when the delay spread would alias on the grid.
     */
    inline ChannelSpectrum build_fiber_channel(const FiberSpec &spec, const FrequencyGrid &grid, std::uint64_t seed,
                                               double kappa)
    {
        spec.validate();
        grid.validate();
        if (!(kappa >= 0.0))
            throw config_error("build_fiber_channel: coupling strength must be >= 0");
        const double spread = propagation_delay_spread_samples(spec, grid);
        if (spread >= static_cast<double>(grid.n_bins) / 2.0)
            throw config_error("build_fiber_channel: grid too coarse, delay spread " + std::to_string(spread) +
                               " samples exceeds half the IDFT window (" + std::to_string(grid.n_bins / 2) + ")");

        const auto modes = expand_lp_to_full_modes(spec);
        const auto m = static_cast<Eigen::Index>(modes.size());
        const double dz = spec.section_length_km();
        const double ts = grid.sample_period_ps();

        RVector amp(m), delay(m), quad(m);
        for (Eigen::Index i = 0; i < m; ++i)
        {
            amp(i) = std::pow(10.0, -modes[i].attenuation_db_km * dz / 20.0);
            delay(i) = modes[i].dmd_ps_km * dz / ts;
            quad(i) = 0.5 * beta2_ps2_per_km(modes[i].cd_ps_nm_km, spec.center_wavelength_nm) * dz / (ts * ts);
        }

        std::vector<CMatrix> coupling;
        coupling.reserve(static_cast<std::size_t>(spec.sections));
        const bool coupled = spec.crosstalk_enabled() && kappa > 0.0;
        const auto weights = coupling_weights(spec);
        Rng rng(seed);
        for (int s = 0; s < spec.sections; ++s)
            coupling.push_back(coupled ? draw_coupling_matrix(rng, kappa * std::sqrt(dz), weights)
                                       : CMatrix::Identity(m, m));

        std::vector<CMatrix> bins(grid.n_bins);
        CVector d(m);
        for (std::size_t k = 0; k < grid.n_bins; ++k)
        {
            const double w = grid.omega(k);
            for (Eigen::Index i = 0; i < m; ++i)
                d(i) = amp(i) * std::exp(iu * (-w * delay(i) + quad(i) * w * w));
            CMatrix h = CMatrix::Identity(m, m);
            for (int s = 0; s < spec.sections; ++s)
            {
                h = d.asDiagonal() * h;
                if (coupled)
                    h = coupling[static_cast<std::size_t>(s)] * h;
            }
            bins[k] = std::move(h);
        }
        return ChannelSpectrum(grid, std::move(bins));
    }

    /// Convenience overload using the deterministic default calibration.
    inline ChannelSpectrum build_fiber_channel(const FiberSpec &spec, const FrequencyGrid &grid, std::uint64_t seed)
    {
        return build_fiber_channel(spec, grid, seed, calibrate_coupling_strength(spec));
    }

    /// Removes the mode-averaged chromatic dispersion (static receiver CD compensation).
    /// Differential CD between modes is left in place.
    inline ChannelSpectrum compensate_common_dispersion(const ChannelSpectrum &h, const FiberSpec &spec)
    {
        auto modes = expand_lp_to_full_modes(spec);
        double b2 = 0.0;
        for (const auto &m : modes)
            b2 += beta2_ps2_per_km(m.cd_ps_nm_km, spec.center_wavelength_nm);
        b2 /= static_cast<double>(modes.size());
        const double ts = h.grid.sample_period_ps();
        const double q = 0.5 * b2 * spec.length_km / (ts * ts);
        ChannelSpectrum out = h;
        for (std::size_t k = 0; k < h.n_bins(); ++k)
        {
            const double w = h.grid.omega(k);
            out[k] *= std::exp(-iu * q * w * w);
        }
        return out;
    }

} // namespace pmimo
