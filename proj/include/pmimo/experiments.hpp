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

#include "pmimo/channel.hpp"
#include "pmimo/estimation.hpp"
#include "pmimo/metrics.hpp"
#include "pmimo/pmodes.hpp"
#include "pmimo/txrx.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <optional>
#include <string>
#include <vector>

namespace pmimo
{
    enum class ExperimentKind
    {
        cir,
        snr_sweep,
        compression_sweep,
    };

    inline const char *to_string(ExperimentKind k)
    {
        switch (k)
        {
        case ExperimentKind::cir: return "cir";
        case ExperimentKind::snr_sweep: return "snr_sweep";
        case ExperimentKind::compression_sweep: return "compression_sweep";
        }
        return "?";
    }

    inline ExperimentKind parse_experiment_kind(const std::string &s)
    {
        if (s == "cir")
            return ExperimentKind::cir;
        if (s == "snr" || s == "snr_sweep")
            return ExperimentKind::snr_sweep;
        if (s == "compression" || s == "compression_sweep")
            return ExperimentKind::compression_sweep;
        throw config_error("unknown experiment kind '" + s + "'");
    }

    // Where PMs are computed from in the CIR and compression experiments.
    enum class PMSource
    {
        channel,   // the simulated channel itself
        estimate,  // a noiseless training-sequence estimate of it
    };

    struct DspOptions
    {
        std::vector<std::size_t> blocks{1, 2, 4, 8, 16};
        std::size_t snr_blocks = 1;
        bool refined = true;   // compute the PMs* columns
        bool schmidt = true;   // compute the SVD column
        std::size_t ts_repetitions = 4;
        double energy_fraction = 0.999;
        int derivative_step = 1;
        int snr_derivative_step = 16;  // half-width for PMs of the estimated channel (SNR sweep)
        SubsetPolicy subset = SubsetPolicy::min_spread;
        PMOperator op = PMOperator::output;
        PMSource pm_source = PMSource::channel;
        bool deskew = true;
        double taper_rolloff = 1.0;  // 0 disables the CIR band taper
        bool compensate_dispersion = true;
        long cir_half_span = 64;
    };

    struct ExperimentConfig
    {
        ExperimentKind kind = ExperimentKind::cir;
        FiberSpec fiber{};
        FrequencyGrid grid{};
        LinkConfig link{};
        DspOptions dsp{};
        std::vector<double> osnr_db{25.0, 27.5, 30.0, 32.5, 35.0, 37.5, 40.0, 42.5, 45.0};
        std::uint64_t seed = 1;
        std::size_t jobs = 1;
        std::string output_dir = "out";

        void validate() const
        {
            fiber.validate();
            grid.validate();
            link.validate(fiber.mode_count());
            if (std::abs(link.symbol_rate_gbd - grid.symbol_rate_gbd) > 1e-12)
                throw config_error("config: link and grid symbol rates differ");
            if (dsp.blocks.empty())
                throw config_error("config: block list is empty");
            for (auto b : dsp.blocks)
                if (b < 1 || b > grid.n_bins)
                    throw config_error("config: block count " + std::to_string(b) + " out of range");
            if (dsp.snr_blocks < 1 || dsp.snr_blocks > grid.n_bins)
                throw config_error("config: snr_blocks out of range");
            if (osnr_db.empty())
                throw config_error("config: OSNR list is empty");
            for (double o : osnr_db)
                if (std::isnan(o))
                    throw config_error("config: OSNR value is NaN");
            if (dsp.ts_repetitions < 1)
                throw config_error("config: ts_repetitions must be >= 1");
            if (!(dsp.energy_fraction > 0.0 && dsp.energy_fraction < 1.0))
                throw config_error("config: energy_fraction must be in (0, 1)");
            if (dsp.derivative_step < 1 || dsp.snr_derivative_step < 1)
                throw config_error("config: derivative steps must be >= 1");
            if (!(dsp.taper_rolloff >= 0.0 && dsp.taper_rolloff <= 1.0))
                throw config_error("config: taper_rolloff must be in [0, 1]");
            if (dsp.cir_half_span < 1)
                throw config_error("config: cir_half_span must be >= 1");
            if (jobs < 1)
                throw config_error("config: jobs must be >= 1");
        }
    };

    /// Numeric table with named columns, written as CSV.
    struct CsvTable
    {
        std::vector<std::string> header;
        std::vector<std::vector<double>> rows;

        std::size_t column(const std::string &name) const
        {
            for (std::size_t i = 0; i < header.size(); ++i)
                if (header[i] == name)
                    return i;
            throw config_error("CsvTable: no column '" + name + "'");
        }

        std::string to_csv() const
        {
            std::string out;
            for (std::size_t i = 0; i < header.size(); ++i)
                out += (i ? "," : "") + header[i];
            out += '\n';
            char buf[64];
            for (const auto &r : rows)
            {
                for (std::size_t i = 0; i < r.size(); ++i)
                {
                    if (std::isnan(r[i]))
                        std::snprintf(buf, sizeof buf, "nan");
                    else
                        std::snprintf(buf, sizeof buf, "%.10g", r[i]);
                    out += (i ? "," : "");
                    out += buf;
                }
                out += '\n';
            }
            return out;
        }
    };

    // Seed streams of derive_seed(master, stream, index).
    namespace seed_stream
    {
        inline constexpr std::uint64_t channel = 1;
        inline constexpr std::uint64_t training = 2;
        inline constexpr std::uint64_t estimate_noise = 3;
        inline constexpr std::uint64_t residual_noise = 4;
        inline constexpr std::uint64_t payload = 5;
        inline constexpr std::uint64_t payload_noise = 6;
    } // namespace seed_stream

    // ---- Shared pipeline pieces ----------------------------------------------------------------

    /// Simulated link channel: fibre, optional common-CD compensation, unit mean power gain.
    inline ChannelSpectrum link_channel(const ExperimentConfig &cfg, std::optional<double> kappa = std::nullopt)
    {
        const double k = kappa ? *kappa : calibrate_coupling_strength(cfg.fiber);
        ChannelSpectrum h = build_fiber_channel(cfg.fiber, cfg.grid, derive_seed(cfg.seed, seed_stream::channel), k);
        if (cfg.dsp.compensate_dispersion)
            h = compensate_common_dispersion(h, cfg.fiber);
        return normalize_power(h);
    }

    /// Transmit-side mux and receive-side demux spectra around a channel, with the noise point.
    struct LinkPath
    {
        ChannelSpectrum mux;    // M x T per bin
        ChannelSpectrum demux;  // T x M per bin
    };

    inline SignalFrame add_noise(const SignalFrame &frame, double variance, std::uint64_t seed)
    {
        if (variance == 0.0)
            return frame;
        SignalFrame out = frame;
        for (Eigen::Index t = 0; t < frame.tributaries(); ++t)
        {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
            for (Eigen::Index i = 0; i < frame.length(); ++i)
                out.samples(i, t) += complex_gaussian(rng, variance);
        }
        return out;
    }

    /// Sends one block through demux * H * mux with noise at the configured point.
    inline SignalFrame transmit(const SignalFrame &tx, const ChannelSpectrum &h, const LinkPath &path,
                                const LinkConfig &link, std::uint64_t noise_seed)
    {
        const ChannelSpectrum fibre = multiply(h, path.mux);
        if (link.noise == NoisePlacement::post_demux)
            return add_awgn_for_osnr(apply_spectrum(multiply(path.demux, fibre), tx), link, noise_seed);
        const SignalFrame rx = add_noise(apply_spectrum(fibre, tx), noise_variance(link.osnr_db, link), noise_seed);
        return apply_spectrum(path.demux, rx);
    }

    /**
     * @brief Training-sequence estimate of demux * H * mux.
     *
     * `repetitions` noisy LS estimates are averaged on the pilot bins, then interpolated.
     */
    inline ChannelSpectrum estimate_link(const ChannelSpectrum &h, const LinkPath &path, const LinkConfig &link,
                                         std::size_t repetitions, std::uint64_t ts_seed, std::uint64_t noise_seed)
    {
        const std::size_t t = static_cast<std::size_t>(path.mux.cols());
        const auto ts = generate_training_set(t, h.n_bins(), 0, ts_seed);
        SignalFrame empty;
        empty.samples.resize(0, static_cast<Eigen::Index>(t));
        empty.symbol_rate_gbd = link.symbol_rate_gbd;
        const SignalFrame frame = assemble_frame(ts, empty);
        std::vector<ChannelEstimate> est;
        for (std::size_t r = 0; r < repetitions; ++r)
            est.push_back(ls_estimate(transmit(frame, h, path, link, derive_seed(noise_seed, r)), ts, h.grid));
        return interpolate_extrapolate(average_estimates(est)).spectrum;
    }

    inline LinkPath identity_path(const ChannelSpectrum &h)
    {
        return {ChannelSpectrum::identity(h.grid, h.cols()), ChannelSpectrum::identity(h.grid, h.rows())};
    }

    /**
     * @brief Mux/demux spectra of a blocked PM set: U_b and S_k V_b^H on the bins of block b.
     *
     * With deskew, S_k = diag(exp(j (w_k - w_anchor) tau_i)) aligns each detected tributary in
     * time (see residual_channel); otherwise S_k = I.
     */
    inline LinkPath pm_path(const FrequencyGrid &grid, const BlockedPMSet &pms, bool deskew = true)
    {
        LinkPath p{ChannelSpectrum(grid, std::vector<CMatrix>(grid.n_bins)),
                   ChannelSpectrum(grid, std::vector<CMatrix>(grid.n_bins))};
        for (std::size_t b = 0; b < pms.ranges.size(); ++b)
        {
            const auto &pm = pms.sets[b];
            const CMatrix vh = pm.v.adjoint();
            const double wa = grid.omega(pm.anchor_bin);
            for (std::size_t k = pms.ranges[b].first; k < pms.ranges[b].second; ++k)
            {
                p.mux[k] = pm.u;
                p.demux[k] = vh;
                if (deskew)
                    for (Eigen::Index i = 0; i < vh.rows(); ++i)
                        p.demux[k].row(i) *= std::exp(iu * (grid.omega(k) - wa) * pm.group_delays(i));
            }
        }
        return p;
    }

    /// Per-bin Schmidt-mode mux/demux (leading t modes).
    inline LinkPath schmidt_path(const SchmidtModes &sm, const FrequencyGrid &grid, std::size_t t)
    {
        LinkPath p{ChannelSpectrum(grid, std::vector<CMatrix>(grid.n_bins)),
                   ChannelSpectrum(grid, std::vector<CMatrix>(grid.n_bins))};
        const auto tt = static_cast<Eigen::Index>(t);
        for (std::size_t k = 0; k < grid.n_bins; ++k)
        {
            p.mux[k] = sm.right[k].leftCols(tt);
            p.demux[k] = sm.left[k].leftCols(tt).adjoint();
        }
        return p;
    }

    inline PMOptions pm_options(const ExperimentConfig &cfg, std::size_t tributaries, bool refined,
                                std::optional<int> step = std::nullopt)
    {
        PMOptions o;
        o.derivative.step = step ? *step : cfg.dsp.derivative_step;
        o.op = cfg.dsp.op;
        o.tributaries = tributaries;
        o.subset = cfg.dsp.subset;
        o.refined = refined;
        return o;
    }

    /// Copy of a PM set with every block's output PMs zero-forcing refined.
    inline BlockedPMSet refine_blocks(const ChannelSpectrum &h, const BlockedPMSet &pms, double max_condition = 1e8)
    {
        BlockedPMSet out = pms;
        for (auto &pm : out.sets)
        {
            pm.v = refine_zero_forcing(h[pm.anchor_bin], pm.u, pm.v, max_condition);
            pm.refined = true;
        }
        return out;
    }

    inline CirProfile measure_cir(const ChannelSpectrum &h, double rolloff)
    {
        return rolloff > 0.0 ? tapered_cir(h, rolloff) : integrated_cir(to_impulse_response(h));
    }

    /// Spectrum the PMs are derived from in the CIR and compression experiments.
    inline ChannelSpectrum pm_source_spectrum(const ExperimentConfig &cfg, const ChannelSpectrum &h)
    {
        if (cfg.dsp.pm_source == PMSource::channel)
            return h;
        LinkConfig quiet = cfg.link;
        quiet.osnr_db = std::numeric_limits<double>::infinity();
        return estimate_link(h, identity_path(h), quiet, 1, derive_seed(cfg.seed, seed_stream::training), 0);
    }

    // ---- CIR -------------------------------------------------------------------------------

    struct CirResult
    {
        CsvTable table;  // xAxis, sum_H, sum_VHU, sum_VnewHU
        CirProfile raw, pm, pm_star;
        std::size_t memory_raw = 0, memory_pm = 0, memory_pm_star = 0;
    };

    /// Integrated CIRs of the channel and of the single-block PM and PMs* residuals.
    inline CirResult run_cir_experiment(const ExperimentConfig &cfg, std::optional<double> kappa = std::nullopt)
    {
        cfg.validate();
        const ChannelSpectrum h = link_channel(cfg, kappa);
        const ChannelSpectrum src = pm_source_spectrum(cfg, h);
        const BlockedPMSet pms = block_partition_pms(src, 1, pm_options(cfg, 0, false));
        const BlockedPMSet pms_star = refine_blocks(src, pms);

        CirResult r;
        r.raw = measure_cir(h, cfg.dsp.taper_rolloff);
        r.pm = measure_cir(residual_channel(h, pms, cfg.dsp.deskew), cfg.dsp.taper_rolloff);
        r.pm_star = measure_cir(residual_channel(h, pms_star, cfg.dsp.deskew), cfg.dsp.taper_rolloff);
        r.memory_raw = channel_memory(r.raw, cfg.dsp.energy_fraction);
        r.memory_pm = channel_memory(r.pm, cfg.dsp.energy_fraction);
        r.memory_pm_star = channel_memory(r.pm_star, cfg.dsp.energy_fraction);

        r.table.header = {"xAxis", "sum_H", "sum_VHU", "sum_VnewHU"};
        const long n = static_cast<long>(h.n_bins());
        const long o = static_cast<long>(r.raw.origin_index);
        const long span = std::min(cfg.dsp.cir_half_span, n / 2 - 1);
        for (long d = -span; d <= span; ++d)
        {
            const auto i = static_cast<std::size_t>(o + d);
            r.table.rows.push_back({static_cast<double>(d), r.raw.values[i], r.pm.values[i], r.pm_star.values[i]});
        }
        return r;
    }

    // ---- Compression ---------------------------------------------------------------------------

    struct CompressionPoint
    {
        std::size_t blocks = 0;
        double pm = 0.0;
        double pm_star = 0.0;
    };

    struct CompressionResult
    {
        CsvTable table;  // Blocks, CIRCompVHU, CIRCompVnewHU
        std::vector<CompressionPoint> points;
        std::size_t memory_raw = 0;
    };

    inline CompressionResult run_compression_sweep(const ExperimentConfig &cfg,
                                                   std::optional<double> kappa = std::nullopt)
    {
        cfg.validate();
        const ChannelSpectrum h = link_channel(cfg, kappa);
        const ChannelSpectrum src = pm_source_spectrum(cfg, h);
        const CirProfile raw = measure_cir(h, cfg.dsp.taper_rolloff);
        const double f = cfg.dsp.energy_fraction;

        auto point = [&](std::size_t nb) {
            const BlockedPMSet pms = block_partition_pms(src, nb, pm_options(cfg, 0, false));
            CompressionPoint p;
            p.blocks = nb;
            p.pm = compression_ratio(raw, measure_cir(residual_channel(h, pms, cfg.dsp.deskew), cfg.dsp.taper_rolloff), f);
            p.pm_star = std::numeric_limits<double>::quiet_NaN();
            if (cfg.dsp.refined)
                p.pm_star = compression_ratio(
                    raw, measure_cir(residual_channel(h, refine_blocks(src, pms), cfg.dsp.deskew), cfg.dsp.taper_rolloff), f);
            return p;
        };

        CompressionResult r;
        r.memory_raw = channel_memory(raw, f);
        std::vector<std::future<CompressionPoint>> futures;
        for (std::size_t i = 0; i < cfg.dsp.blocks.size(); ++i)
        {
            const auto policy = cfg.jobs > 1 ? std::launch::async : std::launch::deferred;
            futures.push_back(std::async(policy, point, cfg.dsp.blocks[i]));
            if (futures.size() - r.points.size() >= cfg.jobs)
                r.points.push_back(futures[r.points.size()].get());
        }
        while (r.points.size() < futures.size())
            r.points.push_back(futures[r.points.size()].get());

        r.table.header = {"Blocks", "CIRCompVHU", "CIRCompVnewHU"};
        for (const auto &p : r.points)
            r.table.rows.push_back({static_cast<double>(p.blocks), p.pm, p.pm_star});
        return r;
    }

    // ---- SNR sweep -------------------------------------------------------------------------

    struct SnrPoint
    {
        double osnr_db = 0.0;
        double theory_db = 0.0;
        double svd = 0.0;
        double pm = 0.0;
        double pm_star = 0.0;
    };

    struct SnrResult
    {
        CsvTable table;  // OSNR_dB, SNRThdB, SNRValueSVD, SNRValueVHUEq, SNRValueVnewHUEq
        std::vector<SnrPoint> points;
    };

    /**
     * @brief Constellation SNR of one method at one OSNR.
     *
     * The residual demux * H * mux is re-estimated from training sequences sent through it,
     * MMSE taps are designed at theory_snr(osnr), and a 16-QAM block is equalised.
     */
    inline double link_snr(const ChannelSpectrum &h, const LinkPath &path, const LinkConfig &link,
                           std::size_t repetitions, std::uint64_t seed, std::uint64_t point)
    {
        const auto t = path.mux.cols();
        const ChannelSpectrum r_hat = estimate_link(h, path, link, repetitions,
                                                    derive_seed(seed, seed_stream::training, static_cast<std::uint64_t>(t)),
                                                    derive_seed(seed, seed_stream::residual_noise, point));
        const double design = std::isinf(link.osnr_db) ? std::numeric_limits<double>::infinity()
                                                       : db_to_linear(theory_snr(link.osnr_db, link));
        const EqualizerTaps taps = mmse_taps(r_hat, design);
        const CMatrix x = random_qam_block(static_cast<Eigen::Index>(h.n_bins()), t, link.qam_order,
                                           derive_seed(seed, seed_stream::payload, point));
        SignalFrame tx = SignalFrame::from_samples(x, link.symbol_rate_gbd);
        const SignalFrame rx = transmit(tx, h, path, link, derive_seed(seed, seed_stream::payload_noise, point));
        return constellation_snr(x, equalize(rx, taps).samples).average;
    }

    inline SnrPoint run_snr_point(const ExperimentConfig &cfg, const ChannelSpectrum &h, std::size_t index)
    {
        SnrPoint p;
        p.osnr_db = cfg.osnr_db[index];
        p.theory_db = theory_snr(p.osnr_db, cfg.link);
        LinkConfig link = cfg.link;
        link.osnr_db = p.osnr_db;
        const auto pt = static_cast<std::uint64_t>(index);

        const ChannelSpectrum h_hat = estimate_link(h, identity_path(h), link, cfg.dsp.ts_repetitions,
                                                    derive_seed(cfg.seed, seed_stream::training),
                                                    derive_seed(cfg.seed, seed_stream::estimate_noise, pt));
        const BlockedPMSet pms = block_partition_pms(
            h_hat, cfg.dsp.snr_blocks, pm_options(cfg, cfg.link.tributaries, false, cfg.dsp.snr_derivative_step));
        p.pm = link_snr(h, pm_path(h.grid, pms, cfg.dsp.deskew), link, cfg.dsp.ts_repetitions, cfg.seed, 3 * pt);
        p.pm_star = std::numeric_limits<double>::quiet_NaN();
        p.svd = std::numeric_limits<double>::quiet_NaN();
        if (cfg.dsp.refined)
            p.pm_star = link_snr(h, pm_path(h.grid, refine_blocks(h_hat, pms), cfg.dsp.deskew), link, cfg.dsp.ts_repetitions,
                                 cfg.seed, 3 * pt + 1);
        if (cfg.dsp.schmidt)
            p.svd = link_snr(h, schmidt_path(schmidt_modes(h_hat), h.grid, static_cast<std::size_t>(h.cols())), link,
                             cfg.dsp.ts_repetitions, cfg.seed, 3 * pt + 2);
        return p;
    }

    /// SNR versus OSNR for Schmidt modes, PMs and PMs*. Points run as independent tasks.
    inline SnrResult run_snr_sweep(const ExperimentConfig &cfg, std::optional<double> kappa = std::nullopt)
    {
        cfg.validate();
        const ChannelSpectrum h = link_channel(cfg, kappa);
        SnrResult r;
        std::vector<std::future<SnrPoint>> futures;
        for (std::size_t i = 0; i < cfg.osnr_db.size(); ++i)
        {
            const auto policy = cfg.jobs > 1 ? std::launch::async : std::launch::deferred;
            futures.push_back(std::async(policy, [&cfg, &h, i] { return run_snr_point(cfg, h, i); }));
            if (futures.size() - r.points.size() >= cfg.jobs)
                r.points.push_back(futures[r.points.size()].get());
        }
        while (r.points.size() < futures.size())
            r.points.push_back(futures[r.points.size()].get());

        r.table.header = {"OSNR_dB", "SNRThdB", "SNRValueSVD", "SNRValueVHUEq", "SNRValueVnewHUEq"};
        for (const auto &p : r.points)
            r.table.rows.push_back({p.osnr_db, p.theory_db, p.svd, p.pm, p.pm_star});
        return r;
    }

} // namespace pmimo
