#include "a2g/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "a2g/policy.hpp"

namespace a2g {

namespace {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    throw ConfigError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

int parse_int(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
    }
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        const uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + v + "'");
    }
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) {
        return "";
    }
    return s.substr(a, b - a + 1);
}

void apply_key(RunConfig& c, const std::string& key, const std::string& value) {
    // env
    if (key == "env.task") {
        if (value == "push") {
            c.env.task = Task::Push;
        } else if (value == "trace") {
            c.env.task = Task::Trace;
        } else {
            throw ConfigError("config: env.task expects push|trace, got '" + value + "'");
        }
    } else if (key == "env.grid") {
        c.env.grid = parse_int(value, key);
    } else if (key == "env.a_max") {
        c.env.a_max = parse_double(value, key);
    } else if (key == "env.success_eps") {
        c.env.success_eps = parse_double(value, key);
    } else if (key == "env.blocks") {
        c.env.blocks = parse_int(value, key);
    } else if (key == "env.t_max") {
        c.env.t_max = parse_int(value, key);
    } else if (key == "env.disturb_bound") {
        c.env.disturb_bound = parse_double(value, key);
    } else if (key == "env.ood_shift_spawn") {
        c.env.ood_shift_spawn = parse_bool(value, key);
    } else if (key == "env.ood_square_blocks") {
        c.env.ood_square_blocks = parse_bool(value, key);
    } else if (key == "env.ood_distractors") {
        c.env.ood_distractors = parse_int(value, key);
    } else if (key == "env.ood_fresh_patterns") {
        c.env.ood_fresh_patterns = parse_bool(value, key);
    } else if (key == "env.trace_count") {
        c.env.trace_count = parse_int(value, key);
    } else if (key == "env.trace_library") {
        c.env.trace_library = parse_int(value, key);
        // msth
    } else if (key == "msth.total_horizon") {
        c.msth.total_horizon = parse_int(value, key);
    } else if (key == "msth.proximal") {
        c.msth.proximal_horizon = parse_int(value, key);
    } else if (key == "msth.stride") {
        c.msth.vision_stride = parse_int(value, key);
    } else if (key == "msth.distal") {
        c.msth.distal_count = parse_int(value, key);
        // wm
    } else if (key == "wm.d_z") {
        c.wm.d_z = parse_int(value, key);
    } else if (key == "wm.layers") {
        c.wm.layers = parse_int(value, key);
    } else if (key == "wm.width") {
        c.wm.width = parse_int(value, key);
    } else if (key == "wm.heads") {
        c.wm.heads = parse_int(value, key);
    } else if (key == "wm.denoise_steps") {
        c.wm.denoise_steps = parse_int(value, key);
    } else if (key == "wm.mlp_ratio") {
        c.wm.mlp_ratio = parse_int(value, key);
    } else if (key == "wm.use_pos_embed") {
        c.wm.use_pos_embed = parse_bool(value, key);
        // ae
    } else if (key == "ae.width") {
        c.ae.width = parse_int(value, key);
    } else if (key == "ae.heads") {
        c.ae.heads = parse_int(value, key);
    } else if (key == "ae.denoise_steps") {
        c.ae.denoise_steps = parse_int(value, key);
    } else if (key == "ae.exec_prefix") {
        c.ae.exec_prefix = parse_int(value, key);
    } else if (key == "ae.mlp_ratio") {
        c.ae.mlp_ratio = parse_int(value, key);
    } else if (key == "model.adapter_rank") {
        c.wm.adapter_rank = parse_int(value, key);
        c.ae.adapter_rank = c.wm.adapter_rank;
        // train
    } else if (key == "train.lambda") {
        c.train.lambda = parse_double(value, key);
    } else if (key == "train.batch") {
        c.train.batch = parse_int(value, key);
    } else if (key == "train.steps1") {
        c.train.steps1 = parse_int(value, key);
    } else if (key == "train.steps2") {
        c.train.steps2 = parse_int(value, key);
    } else if (key == "train.lr") {
        c.train.lr = parse_double(value, key);
    } else if (key == "train.demos") {
        c.train.demos = parse_int(value, key);
        // online
    } else if (key == "online.buffer") {
        c.online.buffer = parse_int(value, key);
    } else if (key == "online.epochs") {
        c.online.epochs = parse_int(value, key);
    } else if (key == "online.batch") {
        c.online.batch = parse_int(value, key);
    } else if (key == "online.adapter_lr") {
        c.online.adapter_lr = parse_double(value, key);
    } else if (key == "online.strategy") {
        c.online.strategy = value;
    } else if (key == "online.rounds") {
        c.online.rounds = parse_int(value, key);
    } else if (key == "online.eval_episodes") {
        c.online.eval_episodes = parse_int(value, key);
    } else if (key == "online.max_cycles") {
        c.online.max_cycles = parse_int(value, key);
    } else if (key == "online.loss") {
        c.online.loss = value;
        // eval / run
    } else if (key == "eval.episodes") {
        c.eval_episodes = parse_int(value, key);
    } else if (key == "run.seed") {
        c.seed = parse_u64(value, key);
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

void emit_config(const RunConfig& c, std::vector<std::pair<std::string, std::string>>& kv) {
    auto add = [&kv](const std::string& k, const std::string& v) { kv.emplace_back(k, v); };
    add("env.task", c.env.task == Task::Push ? "push" : "trace");
    add("env.grid", std::to_string(c.env.grid));
    add("env.a_max", fmt_double(c.env.a_max));
    add("env.success_eps", fmt_double(c.env.success_eps));
    add("env.blocks", std::to_string(c.env.blocks));
    add("env.t_max", std::to_string(c.env.t_max));
    add("env.disturb_bound", fmt_double(c.env.disturb_bound));
    add("env.ood_shift_spawn", c.env.ood_shift_spawn ? "true" : "false");
    add("env.ood_square_blocks", c.env.ood_square_blocks ? "true" : "false");
    add("env.ood_distractors", std::to_string(c.env.ood_distractors));
    add("env.ood_fresh_patterns", c.env.ood_fresh_patterns ? "true" : "false");
    add("env.trace_count", std::to_string(c.env.trace_count));
    add("env.trace_library", std::to_string(c.env.trace_library));
    add("msth.total_horizon", std::to_string(c.msth.total_horizon));
    add("msth.proximal", std::to_string(c.msth.proximal_horizon));
    add("msth.stride", std::to_string(c.msth.vision_stride));
    add("msth.distal", std::to_string(c.msth.distal_count));
    add("wm.d_z", std::to_string(c.wm.d_z));
    add("wm.layers", std::to_string(c.wm.layers));
    add("wm.width", std::to_string(c.wm.width));
    add("wm.heads", std::to_string(c.wm.heads));
    add("wm.denoise_steps", std::to_string(c.wm.denoise_steps));
    add("wm.mlp_ratio", std::to_string(c.wm.mlp_ratio));
    add("wm.use_pos_embed", c.wm.use_pos_embed ? "true" : "false");
    add("ae.width", std::to_string(c.ae.width));
    add("ae.heads", std::to_string(c.ae.heads));
    add("ae.denoise_steps", std::to_string(c.ae.denoise_steps));
    add("ae.exec_prefix", std::to_string(c.ae.exec_prefix));
    add("ae.mlp_ratio", std::to_string(c.ae.mlp_ratio));
    add("model.adapter_rank", std::to_string(c.wm.adapter_rank));
    add("train.lambda", fmt_double(c.train.lambda));
    add("train.batch", std::to_string(c.train.batch));
    add("train.steps1", std::to_string(c.train.steps1));
    add("train.steps2", std::to_string(c.train.steps2));
    add("train.lr", fmt_double(c.train.lr));
    add("train.demos", std::to_string(c.train.demos));
    add("online.buffer", std::to_string(c.online.buffer));
    add("online.epochs", std::to_string(c.online.epochs));
    add("online.batch", std::to_string(c.online.batch));
    add("online.adapter_lr", fmt_double(c.online.adapter_lr));
    add("online.strategy", c.online.strategy);
    add("online.rounds", std::to_string(c.online.rounds));
    add("online.eval_episodes", std::to_string(c.online.eval_episodes));
    add("online.max_cycles", std::to_string(c.online.max_cycles));
    add("online.loss", c.online.loss);
    add("eval.episodes", std::to_string(c.eval_episodes));
    add("run.seed", std::to_string(c.seed));
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) {
        throw std::runtime_error("write failure on '" + path + "'");
    }
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void write_trace_csv(const std::string& path, const std::vector<TrainStepRow>& rows,
                     const std::string& fp) {
    CsvWriter csv(path, "step,L_v,L_a,total");
    for (const TrainStepRow& r : rows) {
        csv.raw_line(CsvWriter::num(r.step) + "," + CsvWriter::num(r.loss_v) + "," +
                     CsvWriter::num(r.loss_a) + "," + CsvWriter::num(r.total));
    }
    csv.fingerprint(fp);
    csv.close();
}

}  // namespace

const char* variant_name(Variant v) { return v == Variant::Id ? "id" : "ood"; }

Variant variant_from_name(const std::string& name) {
    if (name == "id") {
        return Variant::Id;
    }
    if (name == "ood") {
        return Variant::Ood;
    }
    throw ConfigError("unknown variant '" + name + "' (expected id or ood)");
}

RunConfig parse_run_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        line_no += 1;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + t + "'");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
        }
        apply_key(cfg, key, value);
    }
    validate_run_config(cfg);
    return cfg;
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_run_config_text(ss.str());
}

void validate_run_config(const RunConfig& cfg) {
    try {
        cfg.env.validate();
        cfg.msth.validate();
        if (cfg.env.grid % 2 != 0) {
            throw std::invalid_argument("env.grid must be even (2x pooled encoder)");
        }
        WMConfig wm = cfg.wm;
        wm.frames = compute_schedule(cfg.msth).frame_count();
        wm.pooled_dim = (cfg.env.grid / 2) * (cfg.env.grid / 2);
        wm.validate();
        AEConfig ae = cfg.ae;
        ae.layers = cfg.wm.layers;
        ae.proximal = cfg.msth.proximal_horizon;
        ae.distal = cfg.msth.distal_count;
        ae.wm_width = cfg.wm.width;
        ae.validate();
        TrainConfig tc;
        tc.lambda = cfg.train.lambda;
        tc.batch = cfg.train.batch;
        tc.steps = cfg.train.steps1;
        tc.lr = cfg.train.lr;
        tc.validate();
        if (cfg.train.steps2 < 0 || cfg.train.demos < 1) {
            throw std::invalid_argument("train.steps2 must be >= 0 and train.demos >= 1");
        }
        RoundConfig rc;
        rc.buffer_capacity = cfg.online.buffer;
        rc.epochs = cfg.online.epochs;
        rc.batch = cfg.online.batch;
        rc.adapter_lr = cfg.online.adapter_lr;
        rc.max_cycles = cfg.online.max_cycles;
        rc.strategy = strategy_from_name(cfg.online.strategy);
        rc.validate();
        if (cfg.online.loss != "flow" && cfg.online.loss != "regression") {
            throw std::invalid_argument("online.loss must be flow or regression");
        }
        if (cfg.online.rounds < 0 || cfg.online.eval_episodes < 1 || cfg.eval_episodes < 1) {
            throw std::invalid_argument("bad online.rounds / eval episode counts");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

std::string canonical_config_text(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> kv;
    emit_config(cfg, kv);
    std::sort(kv.begin(), kv.end());
    std::ostringstream os;
    for (const auto& [k, v] : kv) {
        os << k << "=" << v << "\n";
    }
    return os.str();
}

std::string config_fingerprint_hex(const RunConfig& cfg) {
    const std::string text = canonical_config_text(cfg);
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return std::string(buf);
}

EnvConfig env_for_variant(const EnvConfig& env, Variant v) {
    EnvConfig out = env;
    if (v == Variant::Id) {
        out.ood_shift_spawn = false;
        out.ood_square_blocks = false;
        out.ood_distractors = 0;
        out.ood_fresh_patterns = false;
        return out;
    }
    const bool any = out.ood_shift_spawn || out.ood_square_blocks || out.ood_distractors > 0 ||
                     out.ood_fresh_patterns;
    if (!any) {
        if (out.task == Task::Push) {
            out.ood_shift_spawn = true;
        } else {
            out.ood_fresh_patterns = true;
        }
    }
    return out;
}

// --- CsvWriter ---------------------------------------------------------------

CsvWriter::CsvWriter(const std::string& path, const std::string& header) : path_(path) {
    buffer_ = header + "\n";
}

void CsvWriter::raw_line(const std::string& line) { buffer_ += line + "\n"; }

void CsvWriter::fingerprint(const std::string& hex) {
    buffer_ += "# config_fingerprint=" + hex + "\n";
}

void CsvWriter::close() {
    if (!closed_) {
        write_file(path_, buffer_);
        closed_ = true;
    }
}

std::string CsvWriter::num(double v) { return fmt_double(v); }
std::string CsvWriter::num(int v) { return std::to_string(v); }

ModelBundle bundle_from_config(const RunConfig& cfg, uint64_t seed) {
    const EnvConfig id_env = env_for_variant(cfg.env, Variant::Id);
    return ModelBundle::create(cfg.msth, cfg.wm, cfg.ae, seed, id_env.fingerprint(), cfg.env.grid);
}

// --- commands ------------------------------------------------------------------

void cmd_gen_demos(const RunConfig& cfg, int n, const std::string& out_path, uint64_t seed) {
    if (n < 1) {
        throw ConfigError("gen-demos: --n must be >= 1");
    }
    const EnvConfig env = env_for_variant(cfg.env, Variant::Id);
    const std::vector<Trajectory> demos = generate_demos(env, n, seed);
    DatasetManifest man;
    man.count = n;
    man.grid = env.grid;
    man.action_dim = 3;
    man.proprio_dim = 3;
    man.env_fingerprint = env.fingerprint();
    save_dataset(out_path, demos, man);
    std::cout << "wrote " << n << " demonstrations to " << out_path << "\n";
}

void cmd_train(const RunConfig& cfg, int stage, const std::string& dataset_path,
               const std::string& bundle_in, const std::string& out_dir, uint64_t seed) {
    const EnvConfig id_env = env_for_variant(cfg.env, Variant::Id);
    DatasetManifest man;
    const std::vector<Trajectory> demos = load_dataset(dataset_path, &man);
    if (man.env_fingerprint != id_env.fingerprint()) {
        throw FingerprintError("dataset '" + dataset_path +
                               "' was generated under a different environment config");
    }
    if (man.grid != cfg.env.grid) {
        throw FingerprintError("dataset grid does not match config grid");
    }
    ModelBundle bundle = [&] {
        if (stage == 1) {
            return bundle_from_config(cfg, seed);
        }
        if (bundle_in.empty()) {
            throw ConfigError("train-stage2: --bundle (stage-1 output) is required");
        }
        ModelBundle b = load_bundle(bundle_in);
        require_bundle_matches(b, cfg.msth, cfg.wm, cfg.ae, id_env.fingerprint());
        if (b.stage < 1) {
            throw ConfigError("train-stage2: bundle '" + bundle_in + "' is not stage-1 trained");
        }
        return b;
    }();
    TrainConfig tc;
    tc.lambda = cfg.train.lambda;
    tc.batch = cfg.train.batch;
    tc.steps = stage == 1 ? cfg.train.steps1 : cfg.train.steps2;
    tc.lr = cfg.train.lr;
    tc.seed = seed;
    const std::vector<TrainStepRow> trace = train_stage(bundle, demos, tc, stage);
    fs::create_directories(out_dir);
    const std::string tag = "stage" + std::to_string(stage);
    save_bundle(join_path(out_dir, tag + ".a2gw"), bundle);
    write_trace_csv(join_path(out_dir, tag + "_trace.csv"), trace, config_fingerprint_hex(cfg));
    if (!trace.empty()) {
        std::cout << tag << ": " << trace.size() << " steps, final total loss "
                  << CsvWriter::num(trace.back().total) << "\n";
    }
}

void cmd_eval(const RunConfig& cfg, const std::string& bundle_path, int episodes, Variant variant,
              bool disturb, const std::string& out_dir, uint64_t seed) {
    if (episodes < 1) {
        throw ConfigError("eval: --episodes must be >= 1");
    }
    ModelBundle bundle = load_bundle(bundle_path);
    const EnvConfig id_env = env_for_variant(cfg.env, Variant::Id);
    require_bundle_matches(bundle, cfg.msth, cfg.wm, cfg.ae, id_env.fingerprint());
    const EnvConfig env = env_for_variant(cfg.env, variant);
    Rng root(seed);
    const uint64_t eval_seed_base = root.fork(stream::kEval).next_u64() >> 16;
    std::vector<EpisodeResult> eps;
    const EvalSummary sum = evaluate_policy(env, bundle, episodes, eval_seed_base, disturb,
                                            root.fork(stream::kPolicy), &eps);
    fs::create_directories(out_dir);
    const std::string path =
        join_path(out_dir, std::string("eval_") + variant_name(variant) + ".csv");
    CsvWriter csv(path, "seed,task,variant,length_class,cycles,success,disturbed");
    for (const EpisodeResult& r : eps) {
        csv.raw_line(std::to_string(r.seed) + "," + (env.task == Task::Push ? "push" : "trace") +
                     "," + variant_name(variant) + "," + r.len_class + "," +
                     CsvWriter::num(r.cycles) + "," + (r.success ? "1" : "0") + "," +
                     (r.disturbed ? "1" : "0"));
    }
    csv.raw_line("# summary episodes=" + std::to_string(sum.episodes) +
                 " successes=" + std::to_string(sum.successes) +
                 " success_rate=" + CsvWriter::num(sum.success_rate));
    csv.fingerprint(config_fingerprint_hex(cfg));
    csv.close();
    std::cout << "eval " << variant_name(variant) << ": success_rate "
              << CsvWriter::num(sum.success_rate) << " over " << episodes << " episodes\n";
    std::cerr << "mean act() latency per cycle: " << CsvWriter::num(sum.mean_act_seconds * 1e3)
              << " ms\n";
}

void cmd_ablate_msth(const RunConfig& cfg, const std::string& out_dir, uint64_t seed) {
    if (cfg.env.task != Task::Trace) {
        throw ConfigError("ablate-msth: config must select env.task = trace");
    }
    fs::create_directories(out_dir);
    const EnvConfig id_env = env_for_variant(cfg.env, Variant::Id);
    const std::vector<Trajectory> demos = generate_demos(id_env, cfg.train.demos, seed);

    auto train_policy = [&](const MSTHParams& msth, const std::string& tag) {
        RunConfig pc = cfg;
        pc.msth = msth;
        ModelBundle bundle =
            ModelBundle::create(msth, pc.wm, pc.ae, seed, id_env.fingerprint(), pc.env.grid);
        TrainConfig tc;
        tc.lambda = pc.train.lambda;
        tc.batch = pc.train.batch;
        tc.steps = pc.train.steps1;
        tc.lr = pc.train.lr;
        tc.seed = seed;
        train_stage(bundle, demos, tc, 1);
        tc.steps = pc.train.steps2;
        train_stage(bundle, demos, tc, 2);
        save_bundle(join_path(out_dir, tag + ".a2gw"), bundle);
        return bundle;
    };

    const ModelBundle msth_policy = train_policy(cfg.msth, "msth_policy");
    MSTHParams fixed = cfg.msth;
    fixed.distal_count = 0;
    fixed.total_horizon = fixed.proximal_horizon;  // fixed-horizon action chunking
    const ModelBundle baseline = train_policy(fixed, "fixed_horizon_policy");

    CsvWriter csv(join_path(out_dir, "ablate_msth.csv"),
                  "policy,variant,length_class,episodes,successes,success_rate");
    const std::vector<std::pair<std::string, int>> classes = {
        {"short", 3}, {"medium", 5}, {"long", 8}};
    Rng root(seed);
    for (const auto& [policy_name, bundle] :
         std::vector<std::pair<std::string, const ModelBundle*>>{{"msth", &msth_policy},
                                                                 {"fixed_horizon", &baseline}}) {
        for (Variant v : {Variant::Id, Variant::Ood}) {
            for (const auto& [cls_name, count] : classes) {
                EnvConfig env = env_for_variant(cfg.env, v);
                env.trace_count = count;
                const uint64_t eval_seed_base =
                    root.fork(stream::kEval).fork(static_cast<uint64_t>(count)).next_u64() >> 16;
                const EvalSummary sum =
                    evaluate_policy(env, *bundle, cfg.eval_episodes, eval_seed_base, false,
                                    root.fork(stream::kPolicy).fork(static_cast<uint64_t>(count)),
                                    nullptr);
                csv.raw_line(policy_name + "," + variant_name(v) + "," + cls_name + "," +
                             std::to_string(sum.episodes) + "," + std::to_string(sum.successes) +
                             "," + CsvWriter::num(sum.success_rate));
                std::cout << policy_name << " " << variant_name(v) << " " << cls_name << ": "
                          << CsvWriter::num(sum.success_rate) << "\n";
            }
        }
    }
    csv.fingerprint(config_fingerprint_hex(cfg));
    csv.close();
}

void cmd_online(const RunConfig& cfg, const std::string& bundle_path, int rounds,
                const std::string& strategy, Variant variant, const std::string& out_dir,
                uint64_t seed, bool resume) {
    RoundConfig rc;
    rc.buffer_capacity = cfg.online.buffer;
    rc.epochs = cfg.online.epochs;
    rc.batch = cfg.online.batch;
    rc.adapter_lr = cfg.online.adapter_lr;
    rc.strategy = strategy_from_name(strategy);
    rc.max_cycles = cfg.online.max_cycles;
    rc.literal_regression = cfg.online.loss == "regression";
    rc.validate();
    if (rounds < 0) {
        throw ConfigError("online-improve: --rounds must be >= 0");
    }
    fs::create_directories(out_dir);
    const EnvConfig id_env = env_for_variant(cfg.env, Variant::Id);
    const EnvConfig env = env_for_variant(cfg.env, variant);

    int start_round = 0;
    ModelBundle bundle = [&] {
        if (resume) {
            for (int r = rounds; r >= 1; --r) {
                const std::string snap = join_path(out_dir, "round_" + std::to_string(r) + ".a2gw");
                if (fs::exists(snap)) {
                    start_round = r;
                    return load_bundle(snap);
                }
            }
        }
        return load_bundle(bundle_path);
    }();
    require_bundle_matches(bundle, cfg.msth, cfg.wm, cfg.ae, id_env.fingerprint());

    const ImprovementRun run = run_improvement(
        env, bundle, rounds, cfg.online.eval_episodes, rc, seed, start_round,
        [&](int r, const ModelBundle& b) {
            save_bundle(join_path(out_dir, "round_" + std::to_string(r) + ".a2gw"), b);
        });
    const std::string curve_path =
        join_path(out_dir, start_round == 0 ? "curve.csv" : "curve_resume.csv");
    CsvWriter csv(curve_path, "round,rollouts,successes,buffer_used,mean_loss,eval_success_rate");
    for (const RoundReport& r : run.reports) {
        csv.raw_line(CsvWriter::num(r.round) + "," + CsvWriter::num(r.rollouts) + "," +
                     CsvWriter::num(r.successes) + "," + CsvWriter::num(r.buffer_used) + "," +
                     CsvWriter::num(r.mean_loss) + "," + CsvWriter::num(r.eval_success_rate));
        std::cout << "round " << r.round << ": eval success "
                  << CsvWriter::num(r.eval_success_rate) << "\n";
    }
    csv.fingerprint(config_fingerprint_hex(cfg));
    csv.close();
}

}  // namespace a2g
