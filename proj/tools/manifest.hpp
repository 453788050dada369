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

#include <Eigen/Core>
#include <json.hpp>
#include <openssl/evp.h>

#include <string>
#include <vector>

namespace pmimo::tools
{
    inline std::string sha256_hex(const std::string &data)
    {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256: digest failed");
        static const char *hex = "0123456789abcdef";
        std::string out;
        for (unsigned i = 0; i < len; ++i)
        {
            out += hex[md[i] >> 4];
            out += hex[md[i] & 15];
        }
        return out;
    }

    struct EmittedFile
    {
        std::string name;
        std::string content;
    };

    struct RunManifest
    {
        std::string tool_version;
        std::string experiment;
        std::string config_text;
        nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
        nlohmann::ordered_json summary = nlohmann::ordered_json::object();
        double wall_clock_s = 0.0;
        std::vector<EmittedFile> files;

        std::string to_json() const
        {
            nlohmann::ordered_json j;
            j["tool"] = "pmimo";
            j["version"] = tool_version;
            j["experiment"] = experiment;
            j["config_sha256"] = sha256_hex(config_text);
            j["seeds"] = seeds;
            j["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                 "." + std::to_string(EIGEN_MINOR_VERSION);
            j["wall_clock_s"] = wall_clock_s;
            j["summary"] = summary;
            auto arr = nlohmann::ordered_json::array();
            for (const auto &f : files)
                arr.push_back({{"name", f.name}, {"bytes", f.content.size()}, {"sha256", sha256_hex(f.content)}});
            j["files"] = arr;
            return j.dump(2) + "\n";
        }
    };

} // namespace pmimo::tools
