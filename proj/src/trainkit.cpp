#include "a2g/trainkit.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "a2g/optim.hpp"

namespace a2g {

namespace {

constexpr char kDatasetMagic[4] = {'A', '2', 'G', '1'};
constexpr char kBundleMagic[4] = {'A', '2', 'G', 'W'};
constexpr uint16_t kDatasetVersion = 1;
constexpr uint16_t kBundleVersion = 1;

// --- little binary helpers with offset-carrying errors ----------------------

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), f_(path, std::ios::binary) {
        if (!f_) {
            throw std::runtime_error("cannot open '" + path + "' for reading");
        }
    }

    void bytes(void* dst, size_t n) {
        f_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(f_.gcount()) != n) {
            throw std::runtime_error("'" + path_ + "': corrupt length, unexpected end of file at byte offset " +
                                     std::to_string(offset_));
        }
        offset_ += n;
    }

    uint16_t u16() {
        uint16_t v = 0;
        bytes(&v, sizeof(v));
        return v;
    }
    uint32_t u32() {
        uint32_t v = 0;
        bytes(&v, sizeof(v));
        return v;
    }
    std::string text(size_t n) {
        std::string s(n, '\0');
        if (n) {
            bytes(s.data(), n);
        }
        return s;
    }
    std::vector<float> f32_array() {
        const uint32_t n = u32();
        std::vector<float> v(n);
        if (n) {
            bytes(v.data(), sizeof(float) * n);
        }
        return v;
    }
    std::vector<double> f64_array(size_t n) {
        std::vector<double> v(n);
        if (n) {
            bytes(v.data(), sizeof(double) * n);
        }
        return v;
    }
    size_t offset() const { return offset_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream f_;
    size_t offset_ = 0;
};

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), f_(path, std::ios::binary | std::ios::trunc) {
        if (!f_) {
            throw std::runtime_error("cannot open '" + path + "' for writing");
        }
    }
    void bytes(const void* src, size_t n) { f_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n)); }
    void u16(uint16_t v) { bytes(&v, sizeof(v)); }
    void u32(uint32_t v) { bytes(&v, sizeof(v)); }
    void text(const std::string& s) { bytes(s.data(), s.size()); }
    void f32_array(const std::vector<float>& v) {
        u32(static_cast<uint32_t>(v.size()));
        if (!v.empty()) {
            bytes(v.data(), sizeof(float) * v.size());
        }
    }
    void close() {
        f_.flush();
        if (!f_) {
            throw std::runtime_error("write failure on '" + path_ + "'");
        }
        f_.close();
    }

private:
    std::string path_;
    std::ofstream f_;
};

std::vector<float> to_f32(const std::vector<double>& d) {
    std::vector<float> out(d.size());
    for (size_t i = 0; i < d.size(); ++i) {
        out[i] = static_cast<float>(d[i]);
    }
    return out;
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("malformed key=value line: '" + line + "'");
        }
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

std::string kv_get(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) {
        throw std::runtime_error("missing header key '" + key + "'");
    }
    return it->second;
}

uint64_t parse_hex64(const std::string& s) { return std::stoull(s, nullptr, 16); }

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

}  // namespace

// --- dataset io --------------------------------------------------------------

void save_dataset(const std::string& path, const std::vector<Trajectory>& trajectories,
                  const DatasetManifest& manifest) {
    if (static_cast<int>(trajectories.size()) != manifest.count) {
        throw std::invalid_argument("save_dataset: manifest count " + std::to_string(manifest.count) +
                                    " does not match " + std::to_string(trajectories.size()) +
                                    " trajectories");
    }
    Writer w(path);
    w.bytes(kDatasetMagic, 4);
    w.u16(kDatasetVersion);
    std::ostringstream m;
    m << "count=" << manifest.count << "\n"
      << "grid=" << manifest.grid << "\n"
      << "action_dim=" << manifest.action_dim << "\n"
      << "proprio_dim=" << manifest.proprio_dim << "\n"
      << "env_fingerprint=" << hex64(manifest.env_fingerprint) << "\n";
    const std::string mtext = m.str();
    w.u32(static_cast<uint32_t>(mtext.size()));
    w.text(mtext);
    for (const Trajectory& tr : trajectories) {
        tr.validate();
        if (tr.seed >= (1ull << 24)) {
            throw std::invalid_argument("save_dataset: trajectory seed too large for float storage");
        }
        std::vector<double> imgs;
        for (const Tensor& im : tr.images) {
            imgs.insert(imgs.end(), im.data.begin(), im.data.end());
        }
        std::vector<double> props;
        for (const Tensor& p : tr.proprios) {
            props.insert(props.end(), p.data.begin(), p.data.end());
        }
        w.f32_array(to_f32(imgs));
        w.f32_array(to_f32(props));
        w.f32_array(to_f32(tr.actions.data));
        w.f32_array(to_f32(tr.goal_image.data));
        w.f32_array({static_cast<float>(tr.seed)});
    }
    w.close();
}

std::vector<Trajectory> load_dataset(const std::string& path, DatasetManifest* manifest_out) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kDatasetMagic, 4) != 0) {
        throw std::runtime_error("'" + path + "': not a dataset file (bad magic at byte offset 0)");
    }
    DatasetManifest man;
    man.version = r.u16();
    if (man.version != kDatasetVersion) {
        throw std::runtime_error("'" + path + "': unsupported dataset format version " +
                                 std::to_string(man.version));
    }
    const uint32_t mlen = r.u32();
    std::map<std::string, std::string> kv;
    try {
        kv = parse_kv(r.text(mlen));
        man.count = std::stoi(kv_get(kv, "count"));
        man.grid = std::stoi(kv_get(kv, "grid"));
        man.action_dim = std::stoi(kv_get(kv, "action_dim"));
        man.proprio_dim = std::stoi(kv_get(kv, "proprio_dim"));
        man.env_fingerprint = parse_hex64(kv_get(kv, "env_fingerprint"));
    } catch (const std::exception& e) {
        throw std::runtime_error("'" + path + "': bad manifest at byte offset " +
                                 std::to_string(r.offset()) + ": " + e.what());
    }
    const int gg = man.grid * man.grid;
    std::vector<Trajectory> out;
    out.reserve(static_cast<size_t>(man.count));
    for (int i = 0; i < man.count; ++i) {
        const size_t rec_offset = r.offset();
        const std::vector<float> imgs = r.f32_array();
        const std::vector<float> props = r.f32_array();
        const std::vector<float> acts = r.f32_array();
        const std::vector<float> goal = r.f32_array();
        const std::vector<float> meta = r.f32_array();
        if (imgs.size() % static_cast<size_t>(gg) != 0 || imgs.empty() ||
            goal.size() != static_cast<size_t>(gg) || meta.size() != 1 ||
            props.size() % static_cast<size_t>(man.proprio_dim) != 0 ||
            acts.size() % static_cast<size_t>(man.action_dim) != 0) {
            throw std::runtime_error("'" + path + "': corrupt trajectory record " +
                                     std::to_string(i) + " at byte offset " +
                                     std::to_string(rec_offset));
        }
        const int frames = static_cast<int>(imgs.size()) / gg;
        Trajectory tr;
        for (int fidx = 0; fidx < frames; ++fidx) {
            Tensor im = Tensor::zeros({man.grid, man.grid});
            for (int j = 0; j < gg; ++j) {
                im.data[static_cast<size_t>(j)] = imgs[static_cast<size_t>(fidx) * gg + j];
            }
            tr.images.push_back(std::move(im));
        }
        for (int fidx = 0; fidx < frames; ++fidx) {
            Tensor p = Tensor::zeros({man.proprio_dim});
            for (int j = 0; j < man.proprio_dim; ++j) {
                p.data[static_cast<size_t>(j)] = props[static_cast<size_t>(fidx) * man.proprio_dim + j];
            }
            tr.proprios.push_back(std::move(p));
        }
        const int T = frames - 1;
        if (acts.size() != static_cast<size_t>(T) * man.action_dim ||
            props.size() != static_cast<size_t>(frames) * man.proprio_dim) {
            throw std::runtime_error("'" + path + "': inconsistent trajectory record " +
                                     std::to_string(i) + " at byte offset " +
                                     std::to_string(rec_offset));
        }
        tr.actions = Tensor::zeros({T, man.action_dim});
        for (size_t j = 0; j < acts.size(); ++j) {
            tr.actions.data[j] = acts[j];
        }
        tr.goal_image = Tensor::zeros({man.grid, man.grid});
        for (int j = 0; j < gg; ++j) {
            tr.goal_image.data[static_cast<size_t>(j)] = goal[static_cast<size_t>(j)];
        }
        tr.seed = static_cast<uint64_t>(meta[0]);
        tr.validate();
        out.push_back(std::move(tr));
    }
    if (manifest_out) {
        *manifest_out = man;
    }
    return out;
}

// --- bundle io -----------------------------------------------------------------

void save_bundle(const std::string& path, const ModelBundle& b) {
    Writer w(path);
    w.bytes(kBundleMagic, 4);
    w.u16(kBundleVersion);
    std::ostringstream h;
    h << "stage=" << b.stage << "\n"
      << "init_seed=" << b.init_seed << "\n"
      << "grid=" << b.grid << "\n"
      << "env_fingerprint=" << hex64(b.env_fingerprint) << "\n"
      << "msth.total_horizon=" << b.msth.total_horizon << "\n"
      << "msth.proximal=" << b.msth.proximal_horizon << "\n"
      << "msth.stride=" << b.msth.vision_stride << "\n"
      << "msth.distal=" << b.msth.distal_count << "\n"
      << "wm.d_z=" << b.wm_cfg.d_z << "\n"
      << "wm.layers=" << b.wm_cfg.layers << "\n"
      << "wm.width=" << b.wm_cfg.width << "\n"
      << "wm.heads=" << b.wm_cfg.heads << "\n"
      << "wm.denoise_steps=" << b.wm_cfg.denoise_steps << "\n"
      << "wm.mlp_ratio=" << b.wm_cfg.mlp_ratio << "\n"
      << "wm.adapter_rank=" << b.wm_cfg.adapter_rank << "\n"
      << "wm.use_pos_embed=" << (b.wm_cfg.use_pos_embed ? 1 : 0) << "\n"
      << "ae.width=" << b.ae_cfg.width << "\n"
      << "ae.heads=" << b.ae_cfg.heads << "\n"
      << "ae.denoise_steps=" << b.ae_cfg.denoise_steps << "\n"
      << "ae.exec_prefix=" << b.ae_cfg.exec_prefix << "\n"
      << "ae.mlp_ratio=" << b.ae_cfg.mlp_ratio << "\n"
      << "ae.action_dim=" << b.ae_cfg.action_dim << "\n"
      << "ae.proprio_dim=" << b.ae_cfg.proprio_dim << "\n"
      << "param_count=" << b.store.count() << "\n";
    const std::string htext = h.str();
    w.u32(static_cast<uint32_t>(htext.size()));
    w.text(htext);
    for (int i = 0; i < b.store.count(); ++i) {
        const Param& p = b.store.at(i);
        w.u32(static_cast<uint32_t>(p.name.size()));
        w.text(p.name);
        w.u32(static_cast<uint32_t>(p.value.shape.size()));
        for (int e : p.value.shape) {
            w.u32(static_cast<uint32_t>(e));
        }
        w.bytes(p.value.data.data(), p.value.data.size() * sizeof(double));
    }
    w.close();
}

ModelBundle load_bundle(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kBundleMagic, 4) != 0) {
        throw std::runtime_error("'" + path + "': not a bundle file (bad magic at byte offset 0)");
    }
    const uint16_t version = r.u16();
    if (version != kBundleVersion) {
        throw std::runtime_error("'" + path + "': unsupported bundle format version " +
                                 std::to_string(version));
    }
    const uint32_t hlen = r.u32();
    MSTHParams msth;
    WMConfig wm_cfg;
    AEConfig ae_cfg;
    int stage = 0;
    int grid = 16;
    uint64_t init_seed = 0;
    uint64_t env_fp = 0;
    int param_count = 0;
    try {
        const auto kv = parse_kv(r.text(hlen));
        stage = std::stoi(kv_get(kv, "stage"));
        init_seed = std::stoull(kv_get(kv, "init_seed"));
        grid = std::stoi(kv_get(kv, "grid"));
        env_fp = parse_hex64(kv_get(kv, "env_fingerprint"));
        msth.total_horizon = std::stoi(kv_get(kv, "msth.total_horizon"));
        msth.proximal_horizon = std::stoi(kv_get(kv, "msth.proximal"));
        msth.vision_stride = std::stoi(kv_get(kv, "msth.stride"));
        msth.distal_count = std::stoi(kv_get(kv, "msth.distal"));
        wm_cfg.d_z = std::stoi(kv_get(kv, "wm.d_z"));
        wm_cfg.layers = std::stoi(kv_get(kv, "wm.layers"));
        wm_cfg.width = std::stoi(kv_get(kv, "wm.width"));
        wm_cfg.heads = std::stoi(kv_get(kv, "wm.heads"));
        wm_cfg.denoise_steps = std::stoi(kv_get(kv, "wm.denoise_steps"));
        wm_cfg.mlp_ratio = std::stoi(kv_get(kv, "wm.mlp_ratio"));
        wm_cfg.adapter_rank = std::stoi(kv_get(kv, "wm.adapter_rank"));
        wm_cfg.use_pos_embed = std::stoi(kv_get(kv, "wm.use_pos_embed")) != 0;
        ae_cfg.width = std::stoi(kv_get(kv, "ae.width"));
        ae_cfg.heads = std::stoi(kv_get(kv, "ae.heads"));
        ae_cfg.denoise_steps = std::stoi(kv_get(kv, "ae.denoise_steps"));
        ae_cfg.exec_prefix = std::stoi(kv_get(kv, "ae.exec_prefix"));
        ae_cfg.mlp_ratio = std::stoi(kv_get(kv, "ae.mlp_ratio"));
        ae_cfg.action_dim = std::stoi(kv_get(kv, "ae.action_dim"));
        ae_cfg.proprio_dim = std::stoi(kv_get(kv, "ae.proprio_dim"));
        param_count = std::stoi(kv_get(kv, "param_count"));
    } catch (const std::exception& e) {
        throw std::runtime_error("'" + path + "': bad bundle header: " + std::string(e.what()));
    }
    ModelBundle b = ModelBundle::create(msth, wm_cfg, ae_cfg, init_seed, env_fp, grid);
    b.stage = stage;
    if (param_count != b.store.count()) {
        throw std::runtime_error("'" + path + "': bundle has " + std::to_string(param_count) +
                                 " tensors, configs imply " + std::to_string(b.store.count()));
    }
    for (int i = 0; i < param_count; ++i) {
        const size_t rec_offset = r.offset();
        const uint32_t name_len = r.u32();
        if (name_len > 4096) {
            throw std::runtime_error("'" + path + "': corrupt tensor name length at byte offset " +
                                     std::to_string(rec_offset));
        }
        const std::string name = r.text(name_len);
        const uint32_t rank = r.u32();
        if (rank > 8) {
            throw std::runtime_error("'" + path + "': corrupt tensor rank at byte offset " +
                                     std::to_string(rec_offset));
        }
        std::vector<int> shape;
        int64_t numel = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            const int e = static_cast<int>(r.u32());
            shape.push_back(e);
            numel *= e;
        }
        const int idx = b.store.find(name);
        if (idx < 0) {
            throw std::runtime_error("'" + path + "': unknown tensor '" + name +
                                     "' at byte offset " + std::to_string(rec_offset));
        }
        Param& p = b.store.at(idx);
        if (p.value.shape != shape) {
            throw std::runtime_error("'" + path + "': tensor '" + name + "' has shape mismatch");
        }
        p.value.data = r.f64_array(static_cast<size_t>(numel));
        if (!p.value.all_finite()) {
            throw std::runtime_error("'" + path + "': tensor '" + name + "' has non-finite values");
        }
    }
    return b;
}

void require_bundle_matches(const ModelBundle& bundle, const MSTHParams& msth,
                            const WMConfig& wm_cfg, const AEConfig& ae_cfg,
                            uint64_t env_fingerprint) {
    if (bundle.msth.fingerprint() != msth.fingerprint()) {
        throw FingerprintError("bundle schedule fingerprint mismatch: bundle was built with K=" +
                               std::to_string(bundle.msth.total_horizon) + ",P=" +
                               std::to_string(bundle.msth.proximal_horizon) + ",r=" +
                               std::to_string(bundle.msth.vision_stride) + ",M=" +
                               std::to_string(bundle.msth.distal_count));
    }
    // frames / pooled_dim / proximal / distal are derived at create time, so
    // compare against a bundle-normalized copy of the expected configs
    WMConfig wexp = wm_cfg;
    wexp.frames = bundle.wm_cfg.frames;
    wexp.pooled_dim = bundle.wm_cfg.pooled_dim;
    AEConfig aexp = ae_cfg;
    aexp.proximal = bundle.ae_cfg.proximal;
    aexp.distal = bundle.ae_cfg.distal;
    aexp.layers = bundle.ae_cfg.layers;
    aexp.wm_width = bundle.ae_cfg.wm_width;
    aexp.adapter_rank = bundle.ae_cfg.adapter_rank;
    if (bundle.wm_cfg.fingerprint() != wexp.fingerprint()) {
        throw FingerprintError("bundle world-model config fingerprint mismatch");
    }
    if (bundle.ae_cfg.fingerprint() != aexp.fingerprint()) {
        throw FingerprintError("bundle action-expert config fingerprint mismatch");
    }
    if (bundle.env_fingerprint != env_fingerprint) {
        throw FingerprintError("bundle environment fingerprint mismatch");
    }
}

// --- losses and training --------------------------------------------------------

void TrainConfig::validate() const {
    if (lambda < 0.0) {
        throw std::invalid_argument("train config: lambda must be >= 0");
    }
    if (batch < 1 || steps < 0 || lr <= 0.0) {
        throw std::invalid_argument("train config: bad batch/steps/lr");
    }
}

TrainingExample example_from_trajectory(const Trajectory& traj, int anchor,
                                        const MSTHSchedule& sched) {
    MSTHTarget target = slice_trajectory(traj, anchor, sched);
    TrainingExample ex;
    ex.visual_targets = std::move(target.visual_targets);
    ex.anchor_image = traj.images[static_cast<size_t>(anchor)];
    ex.goal_image = traj.goal_image;
    ex.proprio = traj.proprios[static_cast<size_t>(anchor)];
    ex.action_targets = std::move(target.action_targets);
    return ex;
}

ExampleLossVars build_example_losses(GraphBinding& g, const WorldModel& wm,
                                     const ActionExpert& ae, const TrainingExample& ex,
                                     Rng& noise_rng) {
    Tape& t = g.tape();
    std::vector<Var> z1_rows;
    z1_rows.reserve(ex.visual_targets.size());
    for (const Tensor& img : ex.visual_targets) {
        z1_rows.push_back(wm.encode_graph(g, img));
    }
    const Var z1 = t.concat_rows(z1_rows);
    const Var z_t = wm.encode_graph(g, ex.anchor_image);
    const Var z_g = wm.encode_graph(g, ex.goal_image);

    const double t_v = noise_rng.uniform();
    const Var z0 = g.constant(Tensor::randn(t.val(z1).shape, noise_rng));
    const Var noisy_v = t.add(t.scale(z0, 1.0 - t_v), t.scale(z1, t_v));
    const WorldModel::Forward wmf = wm.forward(g, noisy_v, z_t, z_g, t_v);
    ExampleLossVars out;
    out.loss_v = t.mse(wmf.velocity, t.sub(z1, z0));

    const double t_a = noise_rng.uniform();
    const Var a1 = g.constant(ex.action_targets);
    const Var a0 = g.constant(Tensor::randn(ex.action_targets.shape, noise_rng));
    const Var noisy_a = t.add(t.scale(a0, 1.0 - t_a), t.scale(a1, t_a));
    const Var prop = g.constant(ex.proprio.as_row());
    const Var vel_a = ae.forward(g, noisy_a, wmf.feats, prop, t_a);
    out.loss_a = t.mse(vel_a, t.sub(a1, a0));
    return out;
}

std::vector<TrainStepRow> train_stage(ModelBundle& bundle, const std::vector<Trajectory>& dataset,
                                      const TrainConfig& cfg, int stage) {
    cfg.validate();
    if (stage != 1 && stage != 2) {
        throw std::invalid_argument("train_stage: stage must be 1 or 2");
    }
    if (dataset.empty()) {
        throw std::invalid_argument("train_stage: empty dataset");
    }
    for (const Trajectory& tr : dataset) {
        if (tr.length() < 2) {
            throw std::invalid_argument("train_stage: trajectory with fewer than 2 observations");
        }
    }
    if (stage == 2 && bundle.stage < 1) {
        throw std::invalid_argument("train_stage: stage 2 requires a stage-1 bundle");
    }

    const std::vector<int> train_idx = bundle.store.indices_of(TrainMode::FullOffline);
    OptimizerState opt;
    opt.lr = cfg.lr;
    std::vector<TrainStepRow> trace;
    trace.reserve(static_cast<size_t>(cfg.steps));
    Rng stage_rng = Rng(cfg.seed).fork(stream::kTrain).fork(static_cast<uint64_t>(stage));
    const int n = static_cast<int>(dataset.size());

    for (int step_i = 0; step_i < cfg.steps; ++step_i) {
        Rng step_rng = stage_rng.fork(static_cast<uint64_t>(step_i));
        Tape tape;
        GraphBinding bind(tape, bundle.store, TrainMode::FullOffline, true);
        std::vector<Var> lvs;
        std::vector<Var> las;
        try {
            for (int b = 0; b < cfg.batch; ++b) {
                Rng item_rng = step_rng.fork(static_cast<uint64_t>(b));
                const Trajectory& tr = dataset[static_cast<size_t>(item_rng.uniform_int(n))];
                const int anchor = item_rng.uniform_int(tr.length() - 1);
                const TrainingExample ex = example_from_trajectory(tr, anchor, bundle.schedule);
                const ExampleLossVars l = build_example_losses(bind, bundle.wm, bundle.ae, ex, item_rng);
                lvs.push_back(l.loss_v);
                las.push_back(l.loss_a);
            }
            const Var loss_v = tape.mean_all(tape.concat_rows(lvs));
            const Var loss_a = tape.mean_all(tape.concat_rows(las));
            const Var total = stage == 1
                                  ? tape.add(loss_v, tape.scale(loss_a, cfg.lambda))
                                  : loss_a;
            TrainStepRow row;
            row.step = step_i;
            row.loss_v = tape.val(loss_v).data[0];
            row.loss_a = tape.val(loss_a).data[0];
            row.total = tape.val(total).data[0];
            if (!std::isfinite(row.total)) {
                throw std::runtime_error("non-finite loss");
            }
            tape.backward(total);
            std::vector<Tensor> grads;
            grads.reserve(train_idx.size());
            std::vector<Tensor*> pvals;
            std::vector<const Tensor*> pgrads;
            for (int idx : train_idx) {
                grads.push_back(bind.grad_of(idx));
            }
            for (size_t k = 0; k < train_idx.size(); ++k) {
                pvals.push_back(&bundle.store.at(train_idx[k]).value);
                pgrads.push_back(&grads[k]);
            }
            optimizer_step(pvals, pgrads, opt);
            trace.push_back(row);
        } catch (const std::exception& e) {
            throw std::runtime_error("stage-" + std::to_string(stage) + " training diverged at step " +
                                     std::to_string(step_i) + ": " + e.what());
        }
    }
    bundle.stage = stage;
    return trace;
}

}  // namespace a2g
