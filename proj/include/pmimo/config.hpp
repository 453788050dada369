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

#include "pmimo/experiments.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pmimo
{
    /**
     * Experiment configuration as `key = value` text.
     *
     *     # comment
     *     experiment = compression_sweep
     *     length_km = 50
     *     xt_db_per_km = off
     *     lp_mode = 01, 0.1913, 0, 22.1761
     *     blocks = 1, 2, 4, 8, 16
     *
     * Unset keys keep the built-in defaults (the reference 12-mode, 50 km link). Any
     * `lp_mode` line replaces the whole default mode table.
     */
    namespace config_detail
    {
        inline std::string trim(std::string_view s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string_view::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r");
            return std::string(s.substr(b, e - b + 1));
        }

        inline std::vector<std::string> split_list(const std::string &s)
        {
            std::vector<std::string> out;
            std::stringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ','))
                out.push_back(trim(item));
            return out;
        }

        inline double to_double(const std::string &key, const std::string &v)
        {
            if (v == "inf" || v == "+inf")
                return std::numeric_limits<double>::infinity();
            if (v == "-inf")
                return -std::numeric_limits<double>::infinity();
            double x = 0.0;
            const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
            if (r.ec != std::errc() || r.ptr != v.data() + v.size())
                throw config_error("config: key '" + key + "' expects a number, got '" + v + "'");
            return x;
        }

        inline std::uint64_t to_uint(const std::string &key, const std::string &v)
        {
            std::uint64_t x = 0;
            const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
            if (r.ec != std::errc() || r.ptr != v.data() + v.size())
                throw config_error("config: key '" + key + "' expects a non-negative integer, got '" + v + "'");
            return x;
        }

        inline bool to_bool(const std::string &key, const std::string &v)
        {
            if (v == "true" || v == "on" || v == "yes" || v == "1")
                return true;
            if (v == "false" || v == "off" || v == "no" || v == "0")
                return false;
            throw config_error("config: key '" + key + "' expects true/false, got '" + v + "'");
        }

        inline std::string fmt(double x)
        {
            if (std::isinf(x))
                return x > 0 ? "inf" : "-inf";
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            return buf;
        }
    } // namespace config_detail

    inline void apply_config_entry(ExperimentConfig &cfg, const std::string &key, const std::string &value,
                                   bool &lp_table_reset)
    {
        using namespace config_detail;
        auto num = [&] { return to_double(key, value); };
        auto uint = [&] { return to_uint(key, value); };
        auto flag = [&] { return to_bool(key, value); };

        if (key == "experiment")
            cfg.kind = parse_experiment_kind(value);
        else if (key == "seed")
            cfg.seed = uint();
        else if (key == "jobs")
            cfg.jobs = uint();
        else if (key == "output_dir")
            cfg.output_dir = value;
        // fibre
        else if (key == "length_km")
            cfg.fiber.length_km = num();
        else if (key == "sections")
            cfg.fiber.sections = static_cast<int>(uint());
        else if (key == "xt_db_per_km")
            cfg.fiber.xt_db_per_km = value == "off" ? -std::numeric_limits<double>::infinity() : num();
        else if (key == "center_wavelength_nm")
            cfg.fiber.center_wavelength_nm = num();
        else if (key == "inter_group_coupling")
            cfg.fiber.inter_group_coupling = num();
        else if (key == "lp_mode")
        {
            const auto f = split_list(value);
            if (f.size() != 4 || f[0].empty())
                throw config_error("config: lp_mode expects 'label, attenuation, dmd, cd'");
            if (!lp_table_reset)
            {
                cfg.fiber.lp_modes.clear();
                lp_table_reset = true;
            }
            cfg.fiber.lp_modes.push_back({f[0], to_double(key, f[1]), to_double(key, f[2]), to_double(key, f[3])});
        }
        // grid and link
        else if (key == "n_bins")
            cfg.grid.n_bins = uint();
        else if (key == "symbol_rate_gbd")
            cfg.grid.symbol_rate_gbd = cfg.link.symbol_rate_gbd = num();
        else if (key == "samples_per_symbol")
            cfg.grid.samples_per_symbol = static_cast<int>(uint());
        else if (key == "reference_bandwidth_ghz")
            cfg.link.reference_bandwidth_ghz = num();
        else if (key == "tributaries")
            cfg.link.tributaries = uint();
        else if (key == "qam_order")
            cfg.link.qam_order = static_cast<int>(uint());
        else if (key == "noise")
        {
            if (value == "post_demux")
                cfg.link.noise = NoisePlacement::post_demux;
            else if (value == "pre_demux")
                cfg.link.noise = NoisePlacement::pre_demux;
            else
                throw config_error("config: noise must be post_demux or pre_demux");
        }
        else if (key == "osnr_db")
        {
            cfg.osnr_db.clear();
            for (const auto &v : split_list(value))
                cfg.osnr_db.push_back(to_double(key, v));
        }
        // DSP
        else if (key == "blocks")
        {
            cfg.dsp.blocks.clear();
            for (const auto &v : split_list(value))
                cfg.dsp.blocks.push_back(to_uint(key, v));
        }
        else if (key == "snr_blocks")
            cfg.dsp.snr_blocks = uint();
        else if (key == "refined")
            cfg.dsp.refined = flag();
        else if (key == "schmidt")
            cfg.dsp.schmidt = flag();
        else if (key == "ts_repetitions")
            cfg.dsp.ts_repetitions = uint();
        else if (key == "energy_fraction")
            cfg.dsp.energy_fraction = num();
        else if (key == "derivative_step")
            cfg.dsp.derivative_step = static_cast<int>(uint());
        else if (key == "snr_derivative_step")
            cfg.dsp.snr_derivative_step = static_cast<int>(uint());
        else if (key == "subset_policy")
        {
            if (value == "min_spread")
                cfg.dsp.subset = SubsetPolicy::min_spread;
            else if (value == "smallest_abs_delay")
                cfg.dsp.subset = SubsetPolicy::smallest_abs_delay;
            else
                throw config_error("config: subset_policy must be min_spread or smallest_abs_delay");
        }
        else if (key == "pm_operator")
        {
            if (value == "output")
                cfg.dsp.op = PMOperator::output;
            else if (value == "input")
                cfg.dsp.op = PMOperator::input;
            else
                throw config_error("config: pm_operator must be output or input");
        }
        else if (key == "pm_source")
        {
            if (value == "channel")
                cfg.dsp.pm_source = PMSource::channel;
            else if (value == "estimate")
                cfg.dsp.pm_source = PMSource::estimate;
            else
                throw config_error("config: pm_source must be channel or estimate");
        }
        else if (key == "deskew")
            cfg.dsp.deskew = flag();
        else if (key == "taper_rolloff")
            cfg.dsp.taper_rolloff = num();
        else if (key == "compensate_dispersion")
            cfg.dsp.compensate_dispersion = flag();
        else if (key == "cir_half_span")
            cfg.dsp.cir_half_span = static_cast<long>(uint());
        else
            throw config_error("config: unknown key '" + key + "'");
    }

    inline ExperimentConfig parse_config(std::istream &in, ExperimentConfig cfg = {})
    {
        std::string line;
        int lineno = 0;
        bool lp_reset = false;
        while (std::getline(in, line))
        {
            ++lineno;
            if (const auto h = line.find('#'); h != std::string::npos)
                line.erase(h);
            const std::string t = config_detail::trim(line);
            if (t.empty())
                continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(lineno) + ": expected 'key = value'");
            const std::string key = config_detail::trim(std::string_view(t).substr(0, eq));
            const std::string value = config_detail::trim(std::string_view(t).substr(eq + 1));
            if (key.empty() || value.empty())
                throw config_error("config line " + std::to_string(lineno) + ": empty key or value");
            try
            {
                apply_config_entry(cfg, key, value, lp_reset);
            }
            catch (const config_error &e)
            {
                throw config_error("config line " + std::to_string(lineno) + ": " + e.what());
            }
        }
        return cfg;
    }

    inline ExperimentConfig parse_config_string(const std::string &text, ExperimentConfig cfg = {})
    {
        std::istringstream in(text);
        return parse_config(in, std::move(cfg));
    }

    inline ExperimentConfig load_config(const std::string &path, ExperimentConfig cfg = {})
    {
        std::ifstream in(path);
        if (!in)
            throw config_error("cannot open config file '" + path + "'");
        return parse_config(in, std::move(cfg));
    }

    /// Canonical text of a resolved config; parse_config_string(to_text(c)) reproduces c.
    inline std::string to_text(const ExperimentConfig &c)
    {
        using config_detail::fmt;
        std::ostringstream o;
        auto list = [](const auto &v) {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i)
            {
                if constexpr (std::is_floating_point_v<std::decay_t<decltype(v[i])>>)
                    s += (i ? ", " : "") + fmt(v[i]);
                else
                    s += (i ? ", " : "") + std::to_string(v[i]);
            }
            return s;
        };
        o << "experiment = " << to_string(c.kind) << '\n'
          << "seed = " << c.seed << '\n'
          << "jobs = " << c.jobs << '\n'
          << "output_dir = " << c.output_dir << '\n'
          << "length_km = " << fmt(c.fiber.length_km) << '\n'
          << "sections = " << c.fiber.sections << '\n'
          << "xt_db_per_km = " << (c.fiber.crosstalk_enabled() ? fmt(c.fiber.xt_db_per_km) : "off") << '\n'
          << "center_wavelength_nm = " << fmt(c.fiber.center_wavelength_nm) << '\n'
          << "inter_group_coupling = " << fmt(c.fiber.inter_group_coupling) << '\n';
        for (const auto &m : c.fiber.lp_modes)
            o << "lp_mode = " << m.label << ", " << fmt(m.attenuation_db_km) << ", " << fmt(m.dmd_ps_km) << ", "
              << fmt(m.cd_ps_nm_km) << '\n';
        o << "n_bins = " << c.grid.n_bins << '\n'
          << "symbol_rate_gbd = " << fmt(c.grid.symbol_rate_gbd) << '\n'
          << "samples_per_symbol = " << c.grid.samples_per_symbol << '\n'
          << "reference_bandwidth_ghz = " << fmt(c.link.reference_bandwidth_ghz) << '\n'
          << "tributaries = " << c.link.tributaries << '\n'
          << "qam_order = " << c.link.qam_order << '\n'
          << "noise = " << (c.link.noise == NoisePlacement::post_demux ? "post_demux" : "pre_demux") << '\n'
          << "osnr_db = " << list(c.osnr_db) << '\n'
          << "blocks = " << list(c.dsp.blocks) << '\n'
          << "snr_blocks = " << c.dsp.snr_blocks << '\n'
          << "refined = " << (c.dsp.refined ? "true" : "false") << '\n'
          << "schmidt = " << (c.dsp.schmidt ? "true" : "false") << '\n'
          << "ts_repetitions = " << c.dsp.ts_repetitions << '\n'
          << "energy_fraction = " << fmt(c.dsp.energy_fraction) << '\n'
          << "derivative_step = " << c.dsp.derivative_step << '\n'
          << "snr_derivative_step = " << c.dsp.snr_derivative_step << '\n'
          << "subset_policy = " << (c.dsp.subset == SubsetPolicy::min_spread ? "min_spread" : "smallest_abs_delay")
          << '\n'
          << "pm_operator = " << (c.dsp.op == PMOperator::output ? "output" : "input") << '\n'
          << "pm_source = " << (c.dsp.pm_source == PMSource::channel ? "channel" : "estimate") << '\n'
          << "deskew = " << (c.dsp.deskew ? "true" : "false") << '\n'
          << "taper_rolloff = " << fmt(c.dsp.taper_rolloff) << '\n'
          << "compensate_dispersion = " << (c.dsp.compensate_dispersion ? "true" : "false") << '\n'
          << "cir_half_span = " << c.dsp.cir_half_span << '\n';
        return o.str();
    }

} // namespace pmimo
