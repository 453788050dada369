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


// Experiment runner: channel impulse responses, SNR-vs-OSNR sweeps and CIR compression
// sweeps, each written as CSV next to a manifest.json.

#include "manifest.hpp"

#include <pmimo/config.hpp>
#include <pmimo/io.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

namespace
{
    constexpr const char *version = "1.0.0";

    struct Overrides
    {
        std::string config_path;
        std::string out_dir;
        std::optional<std::uint64_t> seed;
        std::vector<std::size_t> blocks;
        std::vector<double> osnr;
        std::optional<std::size_t> tributaries;
        std::optional<std::size_t> jobs;
        bool refined = false, no_refined = false;
        bool sm = false, no_sm = false;
        bool no_crosstalk = false;
    };

    void add_common(CLI::App *sub, Overrides &o)
    {
        sub->add_option("-c,--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
        sub->add_option("-o,--out", o.out_dir, "output directory");
        sub->add_option("-s,--seed", o.seed, "master seed");
        sub->add_option("-j,--jobs", o.jobs, "parallel sweep points");
        sub->add_flag("--no-crosstalk", o.no_crosstalk, "disable mode coupling");
    }

    pmimo::ExperimentConfig resolve(pmimo::ExperimentKind kind, const Overrides &o)
    {
        pmimo::ExperimentConfig cfg;
        if (!o.config_path.empty())
            cfg = pmimo::load_config(o.config_path);
        cfg.kind = kind;
        if (!o.out_dir.empty())
            cfg.output_dir = o.out_dir;
        if (o.seed)
            cfg.seed = *o.seed;
        if (!o.blocks.empty())
            cfg.dsp.blocks = o.blocks;
        if (!o.osnr.empty())
            cfg.osnr_db = o.osnr;
        if (o.tributaries)
            cfg.link.tributaries = *o.tributaries;
        if (o.jobs)
            cfg.jobs = *o.jobs;
        if (o.refined)
            cfg.dsp.refined = true;
        if (o.no_refined)
            cfg.dsp.refined = false;
        if (o.sm)
            cfg.dsp.schmidt = true;
        if (o.no_sm)
            cfg.dsp.schmidt = false;
        if (o.no_crosstalk)
            cfg.fiber.xt_db_per_km = -std::numeric_limits<double>::infinity();
        cfg.validate();
        return cfg;
    }

    std::string fmt_db(double x)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", x);
        return buf;
    }

    std::string snr_file_name(const pmimo::ExperimentConfig &cfg)
    {
        const auto [lo, hi] = std::minmax_element(cfg.osnr_db.begin(), cfg.osnr_db.end());
        return "Results_" + fmt_db(cfg.link.symbol_rate_gbd) + "GBd_OSNR_" + fmt_db(*hi) + "dB_to_" + fmt_db(*lo) +
               "dB_" + std::to_string(cfg.dsp.snr_blocks) + "Blocks_" + std::to_string(cfg.link.tributaries) +
               "Trib.csv";
    }

    int run(const pmimo::ExperimentConfig &cfg)
    {
        using clock = std::chrono::steady_clock;
        const auto t0 = clock::now();
        const double kappa = pmimo::calibrate_coupling_strength(cfg.fiber);

        pmimo::tools::RunManifest man;
        man.tool_version = version;
        man.experiment = pmimo::to_string(cfg.kind);
        man.config_text = pmimo::to_text(cfg);
        man.seeds["master"] = cfg.seed;
        man.seeds["channel"] = pmimo::derive_seed(cfg.seed, pmimo::seed_stream::channel);
        man.seeds["calibration"] = pmimo::calibration_seed;
        man.summary["coupling_strength"] = kappa;

        switch (cfg.kind)
        {
        case pmimo::ExperimentKind::cir:
        {
            const auto r = pmimo::run_cir_experiment(cfg, kappa);
            man.files.push_back({"ChannelImpulseResponse.csv", r.table.to_csv()});
            man.summary["energy_fraction"] = cfg.dsp.energy_fraction;
            man.summary["memory_H"] = r.memory_raw;
            man.summary["memory_VHU"] = r.memory_pm;
            man.summary["memory_VnewHU"] = r.memory_pm_star;
            std::cout << "channel memory (" << cfg.dsp.energy_fraction << " energy): H " << r.memory_raw << ", PMs "
                      << r.memory_pm << ", PMs* " << r.memory_pm_star << " taps\n";
            break;
        }
        case pmimo::ExperimentKind::snr_sweep:
        {
            const auto r = pmimo::run_snr_sweep(cfg, kappa);
            man.files.push_back({snr_file_name(cfg), r.table.to_csv()});
            for (const auto &p : r.points)
                std::printf("OSNR %5.1f dB: theory %6.2f  SMs %6.2f  PMs %6.2f  PMs* %6.2f\n", p.osnr_db,
                            p.theory_db, p.svd, p.pm, p.pm_star);
            break;
        }
        case pmimo::ExperimentKind::compression_sweep:
        {
            const auto r = pmimo::run_compression_sweep(cfg, kappa);
            man.files.push_back({"CIRCompression.csv", r.table.to_csv()});
            man.summary["memory_H"] = r.memory_raw;
            for (const auto &p : r.points)
                std::printf("blocks %4zu: compression PMs %6.2f  PMs* %6.2f\n", p.blocks, p.pm, p.pm_star);
            break;
        }
        }
        man.files.push_back({"config.txt", man.config_text});
        man.wall_clock_s = std::chrono::duration<double>(clock::now() - t0).count();

        std::filesystem::create_directories(cfg.output_dir);
        for (const auto &f : man.files)
            pmimo::write_text_file((std::filesystem::path(cfg.output_dir) / f.name).string(), f.content);
        pmimo::write_text_file((std::filesystem::path(cfg.output_dir) / "manifest.json").string(), man.to_json());
        std::cout << "wrote " << man.files.size() << " files and manifest.json to " << cfg.output_dir << "\n";
        return 0;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"pmimo: principal-modes MIMO experiments for multimode fibre links"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);

    Overrides o;
    auto *cir = app.add_subcommand("cir", "integrated CIR of the channel and of the PM / PMs* residuals");
    add_common(cir, o);

    auto *snr = app.add_subcommand("snr", "constellation SNR versus OSNR for SMs, PMs and PMs*");
    add_common(snr, o);
    snr->add_option("--osnr", o.osnr, "OSNR points, dB")->delimiter(',');
    snr->add_option("-T,--tributaries", o.tributaries, "transmitted tributaries (PM subset size)");
    snr->add_flag("--refined", o.refined, "compute the PMs* column");
    snr->add_flag("--no-refined", o.no_refined, "skip the PMs* column");
    snr->add_flag("--sm", o.sm, "compute the Schmidt-mode (SVD) column");
    snr->add_flag("--no-sm", o.no_sm, "skip the Schmidt-mode column");

    auto *comp = app.add_subcommand("compression", "CIR compression versus number of frequency blocks");
    add_common(comp, o);
    comp->add_option("--blocks", o.blocks, "block counts")->delimiter(',');
    comp->add_flag("--refined", o.refined, "compute the PMs* column");
    comp->add_flag("--no-refined", o.no_refined, "skip the PMs* column");

    auto *defaults = app.add_subcommand("config", "print the default configuration");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (defaults->parsed())
        {
            std::cout << pmimo::to_text(pmimo::ExperimentConfig{});
            return 0;
        }
        pmimo::ExperimentKind kind = pmimo::ExperimentKind::cir;
        if (snr->parsed())
            kind = pmimo::ExperimentKind::snr_sweep;
        else if (comp->parsed())
            kind = pmimo::ExperimentKind::compression_sweep;
        return run(resolve(kind, o));
    }
    catch (const pmimo::config_error &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    catch (const pmimo::numerical_error &e)
    {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
