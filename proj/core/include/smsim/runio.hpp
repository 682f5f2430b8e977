#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smsim/noise.hpp"

namespace smsim {

/** One experiment's resolved configuration.  Serialized as JSON; unknown
 *  fields are rejected, missing ones take the defaults below. */
struct RunConfig {
    int n = 64;
    double alpha = 0.9;
    MollifierKind mollifier = MollifierKind::Heat;
    std::vector<double> eps_ladder;  // empty: dyadic 2^{-j}/4 down to 1/eps = n/16
    std::vector<uint64_t> seeds = {1};
    double s_override = 0.0;  // 0: default scale rule
    int b = 2;
    int quad_nodes = 96;
    int eigen_count = 16;
    double k_shift = 0.0;  // 0: automatic shift
    std::string out_dir = "out";
    std::string experiment;
    std::string pot_snapshot;  // optional directory with A.tfld / A2.tfld / pot.json

    std::vector<double> resolved_ladder() const;
};

std::vector<double> default_eps_ladder(int n);

RunConfig load_config(const std::string& path);
RunConfig parse_config_json(const std::string& text);
std::string config_to_json(const RunConfig& cfg);

struct RunRecord {
    std::string experiment;
    std::string config_hash;
    std::string content_hash;  // over all artifacts, in listed order
    std::vector<std::string> artifacts;
    double wall_seconds = 0.0;
    bool pass = false;
    std::string summary;
};

/** Dispatches one experiment (paracheck | renorm | domain | spectrum | weyl |
 *  resolvent | gauge | ladder), writes its CSV/JSON artifacts plus a
 *  runrecord.json under cfg.out_dir, and reports the battery verdict. */
RunRecord run_experiment(const RunConfig& cfg, const std::string& which);

// enhanced-potential snapshots (A.tfld, A2.tfld, pot.json)
void save_potential(const std::string& dir, const EnhancedPotential& pot);
EnhancedPotential load_potential(const std::string& dir, const HeatCalculus& calc);

uint64_t fnv1a(const void* data, size_t bytes, uint64_t seed = 0xcbf29ce484222325ull);
std::string file_hash_hex(const std::vector<std::string>& paths);

}  // namespace smsim
