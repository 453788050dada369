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

#include "pmimo/pmodes.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace pmimo
{
    namespace io_detail
    {
        inline std::string g17(double x)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            return buf;
        }
    } // namespace io_detail

    /**
     * Spectrum CSV: a `# pmimo-spectrum n_bins rows cols symbol_rate_gbd samples_per_symbol`
     * line, the header `bin,row,col,re,im`, then one line per entry in bin-major order.
     * Values are printed with 17 significant digits and round-trip exactly.
     */
    inline std::string spectrum_to_csv(const ChannelSpectrum &h)
    {
        using io_detail::g17;
        std::string out = "# pmimo-spectrum " + std::to_string(h.n_bins()) + " " + std::to_string(h.rows()) + " " +
                          std::to_string(h.cols()) + " " + g17(h.grid.symbol_rate_gbd) + " " +
                          std::to_string(h.grid.samples_per_symbol) + "\nbin,row,col,re,im\n";
        for (std::size_t k = 0; k < h.n_bins(); ++k)
            for (Eigen::Index r = 0; r < h.rows(); ++r)
                for (Eigen::Index c = 0; c < h.cols(); ++c)
                    out += std::to_string(k) + "," + std::to_string(r) + "," + std::to_string(c) + "," +
                           g17(h[k](r, c).real()) + "," + g17(h[k](r, c).imag()) + "\n";
        return out;
    }

    inline ChannelSpectrum spectrum_from_csv(const std::string &text)
    {
        std::istringstream in(text);
        std::string line;
        if (!std::getline(in, line) || line.rfind("# pmimo-spectrum ", 0) != 0)
            throw config_error("spectrum csv: missing '# pmimo-spectrum' line");
        std::istringstream meta(line.substr(17));
        std::size_t n = 0;
        Eigen::Index rows = 0, cols = 0;
        FrequencyGrid g;
        if (!(meta >> n >> rows >> cols >> g.symbol_rate_gbd >> g.samples_per_symbol))
            throw config_error("spectrum csv: malformed metadata line");
        g.n_bins = n;
        if (!std::getline(in, line) || line != "bin,row,col,re,im")
            throw config_error("spectrum csv: missing header");
        ChannelSpectrum h(g, std::vector<CMatrix>(n, CMatrix::Zero(rows, cols)));
        std::size_t count = 0;
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            std::istringstream ls(line);
            std::string f[5];
            for (auto &x : f)
                if (!std::getline(ls, x, ','))
                    throw config_error("spectrum csv: short line");
            const std::size_t k = std::stoul(f[0]);
            const Eigen::Index r = std::stol(f[1]), c = std::stol(f[2]);
            if (k >= n || r < 0 || r >= rows || c < 0 || c >= cols)
                throw config_error("spectrum csv: index out of range");
            h[k](r, c) = Complex(std::stod(f[3]), std::stod(f[4]));
            ++count;
        }
        if (count != n * static_cast<std::size_t>(rows * cols))
            throw config_error("spectrum csv: expected " + std::to_string(n * static_cast<std::size_t>(rows * cols)) +
                               " entries, got " + std::to_string(count));
        h.validate();
        return h;
    }

    /// Per-PM table: index, group delay (samples), gain (dB).
    inline std::string pm_summary_csv(const PMDecomposition &pm)
    {
        std::string out = "pm,group_delay_samples,gain_db\n";
        for (Eigen::Index i = 0; i < pm.u.cols(); ++i)
            out += std::to_string(i) + "," + io_detail::g17(pm.group_delays(i)) + "," + io_detail::g17(pm.gains(i)) +
                   "\n";
        return out;
    }

    /// Matrix as `row,col,re,im` lines (mux/demux programming).
    inline std::string matrix_csv(const CMatrix &m)
    {
        std::string out = "row,col,re,im\n";
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                out += std::to_string(r) + "," + std::to_string(c) + "," + io_detail::g17(m(r, c).real()) + "," +
                       io_detail::g17(m(r, c).imag()) + "\n";
        return out;
    }

    /// Constellation dump with columns I, Q, tributary, label (label = symbol index).
    inline std::string constellation_csv(const CMatrix &symbols)
    {
        std::string out = "I,Q,tributary,label\n";
        for (Eigen::Index t = 0; t < symbols.cols(); ++t)
            for (Eigen::Index i = 0; i < symbols.rows(); ++i)
                out += io_detail::g17(symbols(i, t).real()) + "," + io_detail::g17(symbols(i, t).imag()) + "," +
                       std::to_string(t) + "," + std::to_string(i) + "\n";
        return out;
    }

    inline void write_text_file(const std::string &path, const std::string &content)
    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f)
            throw std::runtime_error("cannot write '" + path + "'");
        f << content;
        if (!f)
            throw std::runtime_error("write failed for '" + path + "'");
    }

} // namespace pmimo
