#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "a2g/actex.hpp"
#include "a2g/gcwm.hpp"
#include "a2g/msth.hpp"
#include "a2g/onlinehpr.hpp"
#include "a2g/simenv.hpp"
#include "a2g/trainkit.hpp"

namespace a2g {

// Violations of the config schema or cross-config invariants (CLI exit 3).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Variant { Id, Ood };
const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct TrainSettings {
    double lambda = 0.1;
    int batch = 16;
    int steps1 = 4000;
    int steps2 = 3000;
    double lr = 1e-3;
    int demos = 500;
};

struct OnlineSettings {
    int buffer = 20;
    int epochs = 10;
    int batch = 10;
    double adapter_lr = 1e-3;
    std::string strategy = "all";
    int rounds = 5;
    int eval_episodes = 50;
    int max_cycles = 0;
    std::string loss = "flow";  // flow | regression
};

// Whole-run configuration read from key=value text. Unknown keys are
// rejected; every cross-config invariant is validated before any run.
struct RunConfig {
    EnvConfig env;
    MSTHParams msth;
    WMConfig wm;
    AEConfig ae;
    TrainSettings train;
    OnlineSettings online;
    int eval_episodes = 50;
    uint64_t seed = 1;
};

RunConfig parse_run_config_text(const std::string& text);
RunConfig parse_run_config(const std::string& path);
void validate_run_config(const RunConfig& cfg);
std::string canonical_config_text(const RunConfig& cfg);
std::string config_fingerprint_hex(const RunConfig& cfg);

// ID clears the OOD flags; OOD applies them (with a per-task default when the
// config sets none).
EnvConfig env_for_variant(const EnvConfig& env, Variant v);

// Deterministic CSV writer: fixed float formatting, one header row, trailing
// config-fingerprint comment.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header);
    void raw_line(const std::string& line);
    void fingerprint(const std::string& hex);
    void close();
    static std::string num(double v);
    static std::string num(int v);

private:
    std::string path_;
    std::string buffer_;
    bool closed_ = false;
};

ModelBundle bundle_from_config(const RunConfig& cfg, uint64_t seed);

// --- CLI command bodies (throw on failure; main maps to exit codes) ---------
void cmd_gen_demos(const RunConfig& cfg, int n, const std::string& out_path, uint64_t seed);
void cmd_train(const RunConfig& cfg, int stage, const std::string& dataset_path,
               const std::string& bundle_in, const std::string& out_dir, uint64_t seed);
void cmd_eval(const RunConfig& cfg, const std::string& bundle_path, int episodes, Variant variant,
              bool disturb, const std::string& out_dir, uint64_t seed);
void cmd_ablate_msth(const RunConfig& cfg, const std::string& out_dir, uint64_t seed);
void cmd_online(const RunConfig& cfg, const std::string& bundle_path, int rounds,
                const std::string& strategy, Variant variant, const std::string& out_dir,
                uint64_t seed, bool resume);

}  // namespace a2g
