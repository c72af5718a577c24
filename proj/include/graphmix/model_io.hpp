#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "graphmix/model.hpp"

namespace graphmix {

// On-disk format: <base>.y.bin holds the observation matrix as a small
// header ("GMIXY1\n", n and d as little-endian u64) followed by row-major
// 64-bit floats; <base>.truth.json is the hidden-truth sidecar.
inline void write_instance(const Instance& inst, const std::string& base) {
    {
        std::ofstream out(base + ".y.bin", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + base + ".y.bin");
        out.write("GMIXY1\n", 7);
        const std::uint64_t n = static_cast<std::uint64_t>(inst.params.n);
        const std::uint64_t d = static_cast<std::uint64_t>(inst.params.d);
        out.write(reinterpret_cast<const char*>(&n), 8);
        out.write(reinterpret_cast<const char*>(&d), 8);
        for (int i = 0; i < inst.params.n; ++i)
            for (int j = 0; j < inst.params.d; ++j) {
                const double v = inst.Y(i, j);
                out.write(reinterpret_cast<const char*>(&v), 8);
            }
    }
    {
        nlohmann::ordered_json truth;
        truth["params"] = {{"n", inst.params.n},
                           {"d", inst.params.d},
                           {"K", inst.params.K},
                           {"delta", inst.params.delta}};
        truth["seed"] = inst.seed;
        auto mu = nlohmann::json::array();
        for (int k = 0; k < inst.params.K; ++k) {
            auto row = nlohmann::json::array();
            for (int j = 0; j < inst.params.d; ++j) row.push_back(inst.mu(k, j));
            mu.push_back(row);
        }
        truth["mu"] = mu;
        auto kstar = nlohmann::json::array();
        for (int v : inst.kstar) kstar.push_back(v + 1);  // 1-based in [K]
        truth["kstar"] = kstar;
        truth["b"] = inst.b;
        std::ofstream out(base + ".truth.json");
        if (!out) throw std::runtime_error("cannot write " + base + ".truth.json");
        out << truth.dump(2) << "\n";
    }
}

inline Instance read_instance(const std::string& base) {
    Instance inst;
    {
        std::ifstream in(base + ".y.bin", std::ios::binary);
        if (!in) throw std::runtime_error("cannot read " + base + ".y.bin");
        char magic[7];
        in.read(magic, 7);
        if (!in || std::memcmp(magic, "GMIXY1\n", 7) != 0)
            throw std::runtime_error(base + ".y.bin: bad magic");
        std::uint64_t n = 0, d = 0;
        in.read(reinterpret_cast<char*>(&n), 8);
        in.read(reinterpret_cast<char*>(&d), 8);
        inst.Y.resize(static_cast<int>(n), static_cast<int>(d));
        for (std::uint64_t i = 0; i < n; ++i)
            for (std::uint64_t j = 0; j < d; ++j) {
                double v;
                in.read(reinterpret_cast<char*>(&v), 8);
                inst.Y(static_cast<int>(i), static_cast<int>(j)) = v;
            }
        if (!in) throw std::runtime_error(base + ".y.bin: truncated");
    }
    {
        std::ifstream in(base + ".truth.json");
        if (!in) throw std::runtime_error("cannot read " + base + ".truth.json");
        nlohmann::json truth;
        in >> truth;
        inst.params.n = truth["params"]["n"];
        inst.params.d = truth["params"]["d"];
        inst.params.K = truth["params"]["K"];
        inst.params.delta = truth["params"]["delta"];
        inst.seed = truth["seed"];
        inst.mu.resize(inst.params.K, inst.params.d);
        for (int k = 0; k < inst.params.K; ++k)
            for (int j = 0; j < inst.params.d; ++j)
                inst.mu(k, j) = truth["mu"][k][j];
        inst.kstar.clear();
        for (const auto& v : truth["kstar"]) inst.kstar.push_back(int(v) - 1);
        inst.b = truth["b"].get<std::vector<int>>();
    }
    return inst;
}

}  // namespace graphmix
