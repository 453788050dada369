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


#include <pmimo/config.hpp>
#include <pmimo/io.hpp>

#include <json.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pmimo;
namespace fs = std::filesystem;

namespace
{
    // Small, fast configuration shared by the experiment tests.
    ExperimentConfig small_config(ExperimentKind kind)
    {
        ExperimentConfig c;
        c.kind = kind;
        c.grid.n_bins = 1024;
        c.osnr_db = {25.0, 40.0};
        c.dsp.blocks = {1, 4};
        c.dsp.ts_repetitions = 2;
        return c;
    }

    std::string read_file(const fs::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    fs::path scratch(const std::string &name)
    {
        const fs::path p = fs::path(::testing::TempDir()) / ("pmimo_cli_" + name);
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }

    int run_cli(const std::string &args)
    {
        const std::string cmd = std::string(PMIMO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    const char *small_config_text = "n_bins = 1024\n"
                                    "osnr_db = 30\n"
                                    "blocks = 1, 2\n"
                                    "ts_repetitions = 1\n";
} // namespace

TEST(Config, RoundTripOfDefaults)
{
    const ExperimentConfig d;
    const std::string text = to_text(d);
    EXPECT_EQ(to_text(parse_config_string(text)), text);
}

TEST(Config, RoundTripOfEditedValues)
{
    const auto c = parse_config_string("experiment = snr\n"
                                       "seed = 42  # trailing comment\n"
                                       "xt_db_per_km = off\n"
                                       "osnr_db = 20, 22.5\n"
                                       "blocks = 1, 3, 9\n"
                                       "pm_operator = input\n"
                                       "subset_policy = smallest_abs_delay\n"
                                       "noise = pre_demux\n"
                                       "symbol_rate_gbd = 28\n"
                                       "inter_group_coupling = 0.1\n");
    EXPECT_EQ(c.kind, ExperimentKind::snr_sweep);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_FALSE(c.fiber.crosstalk_enabled());
    EXPECT_EQ(c.osnr_db, (std::vector<double>{20.0, 22.5}));
    EXPECT_EQ(c.dsp.blocks, (std::vector<std::size_t>{1, 3, 9}));
    EXPECT_EQ(c.dsp.op, PMOperator::input);
    EXPECT_EQ(c.dsp.subset, SubsetPolicy::smallest_abs_delay);
    EXPECT_EQ(c.link.noise, NoisePlacement::pre_demux);
    EXPECT_DOUBLE_EQ(c.grid.symbol_rate_gbd, 28.0);
    EXPECT_DOUBLE_EQ(c.link.symbol_rate_gbd, 28.0);
    EXPECT_DOUBLE_EQ(c.fiber.inter_group_coupling, 0.1);
    EXPECT_EQ(to_text(parse_config_string(to_text(c))), to_text(c));
}

TEST(Config, LpModeListReplacesDefaults)
{
    const auto c = parse_config_string("lp_mode = 01, 0.2, 0, 22\n"
                                       "lp_mode = 11a, 0.21, -2.5, 21\n");
    ASSERT_EQ(c.fiber.lp_modes.size(), 2u);
    EXPECT_EQ(c.fiber.lp_modes[1], (LPModeParams{"11a", 0.21, -2.5, 21.0}));
    EXPECT_EQ(c.fiber.mode_count(), 4u);
}

TEST(Config, ErrorsCarryLineNumbers)
{
    try
    {
        parse_config_string("seed = 1\n\nbogus_key = 3\n");
        FAIL() << "expected config_error";
    }
    catch (const config_error &e)
    {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("bogus_key"), std::string::npos);
    }
    EXPECT_THROW(parse_config_string("seed = abc\n"), config_error);
    EXPECT_THROW(parse_config_string("no equals sign\n"), config_error);
    EXPECT_THROW(parse_config_string("experiment = fft\n"), config_error);
    EXPECT_THROW(parse_config_string("lp_mode = 01, 0.2\n"), config_error);
    EXPECT_THROW(load_config("/nonexistent/pmimo.conf"), config_error);
}

TEST(Config, Validation)
{
    ExperimentConfig c;
    EXPECT_NO_THROW(c.validate());
    c.dsp.blocks = {8192};
    EXPECT_THROW(c.validate(), config_error);
    c = ExperimentConfig{};
    c.link.symbol_rate_gbd = 30.0;
    EXPECT_THROW(c.validate(), config_error);
    c = ExperimentConfig{};
    c.dsp.energy_fraction = 1.0;
    EXPECT_THROW(c.validate(), config_error);
}

TEST(Io, SpectrumCsvRoundTrip)
{
    FrequencyGrid g;
    g.n_bins = 8;
    Rng rng(3);
    std::vector<CMatrix> bins;
    for (int k = 0; k < 8; ++k)
    {
        CMatrix m(2, 3);
        for (Eigen::Index i = 0; i < 6; ++i)
            m(i % 2, i / 2) = complex_gaussian(rng, 1.0);
        bins.push_back(m);
    }
    const ChannelSpectrum h(g, bins);
    const auto back = spectrum_from_csv(spectrum_to_csv(h));
    EXPECT_EQ(back.grid, g);
    for (std::size_t k = 0; k < 8; ++k)
        EXPECT_TRUE((back[k].array() == h[k].array()).all());
    EXPECT_THROW(spectrum_from_csv("bin,row,col,re,im\n"), config_error);
}

TEST(Experiments, CsvHeaders)
{
    EXPECT_EQ(run_cir_experiment(small_config(ExperimentKind::cir)).table.header,
              (std::vector<std::string>{"xAxis", "sum_H", "sum_VHU", "sum_VnewHU"}));
    EXPECT_EQ(run_compression_sweep(small_config(ExperimentKind::compression_sweep)).table.header,
              (std::vector<std::string>{"Blocks", "CIRCompVHU", "CIRCompVnewHU"}));
}

TEST(Experiments, CirRowsAndDeterminism)
{
    auto cfg = small_config(ExperimentKind::cir);
    const auto a = run_cir_experiment(cfg), b = run_cir_experiment(cfg);
    EXPECT_EQ(a.table.to_csv(), b.table.to_csv());
    EXPECT_EQ(a.table.rows.size(), 129u);
    EXPECT_EQ(a.table.rows.front()[0], -64.0);
    EXPECT_EQ(a.table.rows[64][0], 0.0);
    cfg.seed = 2;
    EXPECT_NE(run_cir_experiment(cfg).table.to_csv(), a.table.to_csv());
}

TEST(Experiments, UncoupledZeroDmdChannelIsADelta)
{
    auto cfg = small_config(ExperimentKind::cir);
    cfg.fiber.xt_db_per_km = -std::numeric_limits<double>::infinity();
    for (auto &lp : cfg.fiber.lp_modes)
    {
        lp.dmd_ps_km = 0.0;
        lp.cd_ps_nm_km = 22.0;
    }
    cfg.dsp.taper_rolloff = 0.0;
    const auto r = run_cir_experiment(cfg);
    EXPECT_EQ(r.memory_raw, 1u);
    EXPECT_EQ(r.memory_pm, 1u);
    EXPECT_EQ(r.memory_pm_star, 1u);
    const std::size_t c = r.table.column("sum_H");
    for (const auto &row : r.table.rows)
        EXPECT_NEAR(row[c], row[0] == 0.0 ? 1.0 : 0.0, 1e-12);
}

TEST(Experiments, CompressionDeterministicAcrossJobs)
{
    auto cfg = small_config(ExperimentKind::compression_sweep);
    const auto serial = run_compression_sweep(cfg);
    cfg.jobs = 2;
    EXPECT_EQ(run_compression_sweep(cfg).table.to_csv(), serial.table.to_csv());
    for (const auto &p : serial.points)
        EXPECT_GE(p.pm, 1.0);
}

TEST(Experiments, SnrSweepColumnsAndTheory)
{
    // Default grid: 12-bin pilot spacing must resolve the residual delay spread.
    auto cfg = small_config(ExperimentKind::snr_sweep);
    cfg.grid.n_bins = 4096;
    const auto r = run_snr_sweep(cfg);
    EXPECT_EQ(r.table.header,
              (std::vector<std::string>{"OSNR_dB", "SNRThdB", "SNRValueSVD", "SNRValueVHUEq", "SNRValueVnewHUEq"}));
    ASSERT_EQ(r.points.size(), 2u);
    for (const auto &p : r.points)
    {
        EXPECT_DOUBLE_EQ(p.theory_db, theory_snr(p.osnr_db, cfg.link));
        EXPECT_LT(p.pm, p.theory_db + 0.5);
        EXPECT_GT(p.pm, p.theory_db - 3.0);
        EXPECT_TRUE(std::isfinite(p.svd));
        EXPECT_TRUE(std::isfinite(p.pm_star));
    }
    cfg.jobs = 2;
    EXPECT_EQ(run_snr_sweep(cfg).table.to_csv(), r.table.to_csv());
    cfg.dsp.refined = false;
    cfg.dsp.schmidt = false;
    const auto bare = run_snr_sweep(cfg);
    EXPECT_TRUE(std::isnan(bare.points[0].pm_star));
    EXPECT_NE(bare.table.to_csv().find("nan"), std::string::npos);
}

TEST(Cli, CirRunWritesFilesAndManifest)
{
    const fs::path dir = scratch("cir");
    std::ofstream(dir / "run.conf") << small_config_text;
    ASSERT_EQ(run_cli("cir --config " + (dir / "run.conf").string() + " --out " + (dir / "a").string()), 0);
    ASSERT_EQ(run_cli("cir --config " + (dir / "run.conf").string() + " --out " + (dir / "b").string()), 0);
    EXPECT_EQ(read_file(dir / "a" / "ChannelImpulseResponse.csv"), read_file(dir / "b" / "ChannelImpulseResponse.csv"));

    const auto man = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
    EXPECT_EQ(man["experiment"], "cir");
    EXPECT_EQ(man["config_sha256"].get<std::string>().size(), 64u);
    bool found = false;
    for (const auto &f : man["files"])
    {
        EXPECT_TRUE(fs::exists(dir / "a" / f["name"].get<std::string>()));
        EXPECT_EQ(f["bytes"].get<std::size_t>(), fs::file_size(dir / "a" / f["name"].get<std::string>()));
        found = found || f["name"] == "ChannelImpulseResponse.csv";
    }
    EXPECT_TRUE(found);
    const auto cfg = load_config((dir / "a" / "config.txt").string());
    EXPECT_EQ(cfg.grid.n_bins, 1024u);
}

TEST(Cli, SnrFileName)
{
    const fs::path dir = scratch("snr");
    std::ofstream(dir / "run.conf") << "ts_repetitions = 1\n";
    ASSERT_EQ(run_cli("snr --config " + (dir / "run.conf").string() + " --osnr 25,35 -T 6 --no-sm --out " +
                      dir.string()),
              0);
    EXPECT_TRUE(fs::exists(dir / "Results_33GBd_OSNR_35dB_to_25dB_1Blocks_6Trib.csv"));
}

TEST(Cli, ExitCodes)
{
    const fs::path dir = scratch("codes");
    EXPECT_EQ(run_cli("config"), 0);
    EXPECT_NE(run_cli(""), 0);
    std::ofstream(dir / "bad.conf") << "nonsense_key = 1\n";
    EXPECT_EQ(run_cli("cir --config " + (dir / "bad.conf").string() + " --out " + dir.string()), 1);
    std::ofstream(dir / "range.conf") << "n_bins = 1000\n";
    EXPECT_EQ(run_cli("cir --config " + (dir / "range.conf").string() + " --out " + dir.string()), 1);

    // One LP group attenuated by 1000 dB: H is numerically singular.
    std::ofstream(dir / "singular.conf") << small_config_text << "lp_mode = 01, 0.19, 0, 22\n"
                                         << "lp_mode = 02, 20, -10.5, 21.5\n"
                                         << "lp_mode = 11a, 0.18, -1.5, 22\n"
                                         << "lp_mode = 11b, 0.18, -1.5, 22\n"
                                         << "tributaries = 8\n"
                                         << "xt_db_per_km = off\n";
    EXPECT_EQ(run_cli("cir --config " + (dir / "singular.conf").string() + " --out " + dir.string()), 2);
}
