#include "a2g/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace a2g {

namespace {

constexpr uint64_t kPatternLibraryKey = 0x7261636530303161ull;
constexpr int kResetAttempts = 64;

// ID spawn band for push blocks and goals; the OOD shift moves both into a
// disjoint band on the right.
constexpr double kIdX0 = 0.15, kIdX1 = 0.62;
constexpr double kOodX0 = 0.72, kOodX1 = 0.88;
constexpr double kIdY0 = 0.15, kIdY1 = 0.85;

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

double clamp_abs(double v, double bound) { return std::min(bound, std::max(-bound, v)); }

const std::vector<int>& trace_classes() {
    static const std::vector<int> classes = {3, 5, 8};
    return classes;
}

Vec2 sample_in(Rng& rng, double x0, double x1, double y0, double y1) {
    return Vec2{rng.uniform(x0, x1), rng.uniform(y0, y1)};
}

double seg_dist(const Vec2& p, const Vec2& a, const Vec2& b) {
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::min(1.0, std::max(0.0, t));
    const double qx = a.x + t * vx;
    const double qy = a.y + t * vy;
    return std::hypot(p.x - qx, p.y - qy);
}

struct SampledInstance {
    WorldState state;
    std::vector<Vec2> block_goals;
    int waypoint_count = 0;
};

std::vector<Vec2> sample_waypoints(Rng& rng, int count) {
    std::vector<Vec2> wps;
    wps.push_back(sample_in(rng, 0.15, 0.85, 0.15, 0.85));
    while (static_cast<int>(wps.size()) < count) {
        const Vec2 cand = sample_in(rng, 0.15, 0.85, 0.15, 0.85);
        const double d = dist(cand, wps.back());
        if (d >= 0.16 && d <= 0.5) {
            wps.push_back(cand);
        }
    }
    return wps;
}

int class_of_pattern_id(int id) { return trace_classes()[static_cast<size_t>(id % 3)]; }

SampledInstance sample_instance(const EnvConfig& cfg, Rng& rng) {
    SampledInstance inst;
    inst.state.agent = sample_in(rng, 0.12, 0.88, 0.12, 0.88);
    if (cfg.task == Task::Push) {
        const double x0 = cfg.ood_shift_spawn ? kOodX0 : kIdX0;
        const double x1 = cfg.ood_shift_spawn ? kOodX1 : kIdX1;
        for (int b = 0; b < cfg.blocks; ++b) {
            for (int tries = 0; tries < 200; ++tries) {
                const Vec2 cand = sample_in(rng, x0, x1, kIdY0, kIdY1);
                bool ok = dist(cand, inst.state.agent) >= 0.14;
                for (const Vec2& other : inst.state.blocks) {
                    ok = ok && dist(cand, other) >= 0.18;
                }
                if (ok) {
                    inst.state.blocks.push_back(cand);
                    break;
                }
            }
        }
        for (int b = 0; b < cfg.blocks; ++b) {
            for (int tries = 0; tries < 200; ++tries) {
                const Vec2 cand = sample_in(rng, x0, x1, kIdY0, kIdY1);
                bool ok = dist(cand, inst.state.blocks[static_cast<size_t>(b)]) >= 0.18;
                for (const Vec2& other : inst.block_goals) {
                    ok = ok && dist(cand, other) >= 0.18;
                }
                if (ok) {
                    inst.block_goals.push_back(cand);
                    break;
                }
            }
        }
        if (static_cast<int>(inst.state.blocks.size()) != cfg.blocks ||
            static_cast<int>(inst.block_goals.size()) != cfg.blocks) {
            inst.state.blocks.clear();  // flag as failed; caller retries
            return inst;
        }
        for (int d = 0; d < cfg.ood_distractors; ++d) {
            for (int tries = 0; tries < 200; ++tries) {
                const Vec2 cand = sample_in(rng, 0.12, 0.88, 0.12, 0.88);
                bool ok = dist(cand, inst.state.agent) >= 0.14;
                for (const Vec2& other : inst.state.blocks) {
                    ok = ok && dist(cand, other) >= 0.18;
                }
                for (const Vec2& g : inst.block_goals) {
                    ok = ok && dist(cand, g) >= 0.18;
                }
                if (ok) {
                    inst.state.blocks.push_back(cand);
                    break;
                }
            }
        }
    } else {
        int count = cfg.trace_count;
        if (cfg.ood_fresh_patterns) {
            if (count == 0) {
                count = trace_classes()[static_cast<size_t>(rng.uniform_int(3))];
            }
            inst.state.blocks = sample_waypoints(rng, count);
        } else {
            int id = 0;
            if (count == 0) {
                id = rng.uniform_int(cfg.trace_library);
                count = class_of_pattern_id(id);
            } else {
                int cls = 0;
                for (size_t i = 0; i < trace_classes().size(); ++i) {
                    if (trace_classes()[i] == count) {
                        cls = static_cast<int>(i);
                    }
                }
                const int group = rng.uniform_int(std::max(1, cfg.trace_library / 3));
                id = 3 * group + cls;
            }
            Rng lib_rng = Rng(kPatternLibraryKey).fork(static_cast<uint64_t>(id));
            inst.state.blocks = sample_waypoints(lib_rng, count);
        }
        inst.waypoint_count = count;
        inst.state.progress = 0;
    }
    return inst;
}

void draw_disc(Tensor& img, const Vec2& c, double radius, double intensity, int G, bool square) {
    const double aa = 1.0 / G;
    for (int r = 0; r < G; ++r) {
        const double py = (r + 0.5) / G;
        for (int col = 0; col < G; ++col) {
            const double px = (col + 0.5) / G;
            double d;
            if (square) {
                d = std::max(std::fabs(px - c.x), std::fabs(py - c.y));
            } else {
                d = std::hypot(px - c.x, py - c.y);
            }
            const double cov = std::min(1.0, std::max(0.0, (radius - d) / aa + 0.5));
            double& v = img.at(r, col);
            v = std::max(v, cov * intensity);
        }
    }
}

void draw_segment(Tensor& img, const Vec2& a, const Vec2& b, double thickness, double intensity,
                  int G) {
    const double aa = 1.0 / G;
    for (int r = 0; r < G; ++r) {
        const double py = (r + 0.5) / G;
        for (int col = 0; col < G; ++col) {
            const double px = (col + 0.5) / G;
            const double d = seg_dist(Vec2{px, py}, a, b);
            const double cov = std::min(1.0, std::max(0.0, (thickness - d) / aa + 0.5));
            double& v = img.at(r, col);
            v = std::max(v, cov * intensity);
        }
    }
}

}  // namespace

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool in_id_spawn_region(const Vec2& p) {
    return p.x >= kIdX0 && p.x <= kIdX1 && p.y >= kIdY0 && p.y <= kIdY1;
}

void EnvConfig::validate() const {
    if (grid < 8) {
        throw std::invalid_argument("env: grid must be >= 8");
    }
    if (success_eps <= 0.0) {
        throw std::invalid_argument("env: success_eps must be > 0");
    }
    if (a_max <= 0.0) {
        throw std::invalid_argument("env: a_max must be > 0");
    }
    if (blocks < 1) {
        throw std::invalid_argument("env: blocks must be >= 1");
    }
    if (ood_distractors < 0) {
        throw std::invalid_argument("env: distractor count must be >= 0");
    }
    if (trace_count != 0) {
        bool known = false;
        for (int c : trace_classes()) {
            known = known || c == trace_count;
        }
        if (!known) {
            throw std::invalid_argument("env: trace_count must be 0, 3, 5 or 8");
        }
    }
    if (trace_library < 3) {
        throw std::invalid_argument("env: trace_library must be >= 3");
    }
    if (t_max < 1) {
        throw std::invalid_argument("env: t_max must be >= 1");
    }
}

uint64_t EnvConfig::fingerprint() const {
    uint64_t h = 0xcbf29ce484222325ull;
    auto fold = [&h](uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ull;
    };
    auto fold_d = [&](double v) {
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        fold(bits);
    };
    fold(task == Task::Push ? 1 : 2);
    fold(static_cast<uint64_t>(grid));
    fold_d(a_max);
    fold_d(success_eps);
    fold(static_cast<uint64_t>(blocks));
    fold_d(agent_radius);
    fold_d(block_radius);
    fold_d(grip_radius);
    fold_d(waypoint_radius);
    fold_d(trail_thickness);
    fold(static_cast<uint64_t>(t_max));
    fold_d(disturb_bound);
    fold(ood_shift_spawn ? 1 : 0);
    fold(ood_square_blocks ? 1 : 0);
    fold(static_cast<uint64_t>(ood_distractors));
    fold(ood_fresh_patterns ? 1 : 0);
    fold(static_cast<uint64_t>(trace_count));
    fold(static_cast<uint64_t>(trace_library));
    return h;
}

int episode_step_limit(const EnvConfig& cfg, int waypoint_count) {
    if (cfg.task == Task::Push) {
        return cfg.t_max;
    }
    return 24 + 16 * waypoint_count;
}

std::string length_class(const EnvConfig& cfg, const WorldState& s) {
    if (cfg.task == Task::Push) {
        return "na";
    }
    const int n = static_cast<int>(s.blocks.size());
    if (n <= 3) {
        return "short";
    }
    if (n <= 6) {
        return "medium";
    }
    return "long";
}

WorldState step(const WorldState& s, const Action& a, const EnvConfig& cfg) {
    WorldState ns = s;
    if (cfg.task == Task::Push) {
        if (a.grip) {
            if (ns.carrying < 0) {
                int best = -1;
                double best_d = cfg.grip_radius;
                for (size_t b = 0; b < ns.blocks.size(); ++b) {
                    const double d = dist(ns.agent, ns.blocks[b]);
                    if (d <= best_d) {
                        best_d = d;
                        best = static_cast<int>(b);
                    }
                }
                ns.carrying = best;
            }
        } else {
            ns.carrying = -1;
        }
    }
    const double dx = clamp_abs(a.dx, cfg.a_max);
    const double dy = clamp_abs(a.dy, cfg.a_max);
    ns.agent.x = clamp01(ns.agent.x + dx);
    ns.agent.y = clamp01(ns.agent.y + dy);
    if (ns.carrying >= 0) {
        Vec2& blk = ns.blocks[static_cast<size_t>(ns.carrying)];
        blk.x = clamp01(blk.x + dx);
        blk.y = clamp01(blk.y + dy);
    }
    if (cfg.task == Task::Trace) {
        const int n = static_cast<int>(ns.blocks.size());
        while (ns.progress < n &&
               dist(ns.agent, ns.blocks[static_cast<size_t>(ns.progress)]) <= cfg.success_eps) {
            ns.progress += 1;
        }
    }
    return ns;
}

Tensor render(const WorldState& s, const EnvConfig& cfg) {
    Tensor img = Tensor::zeros({cfg.grid, cfg.grid});
    if (cfg.task == Task::Trace) {
        for (int i = 1; i < s.progress; ++i) {
            draw_segment(img, s.blocks[static_cast<size_t>(i - 1)], s.blocks[static_cast<size_t>(i)],
                         cfg.trail_thickness, 0.3, cfg.grid);
        }
        for (const Vec2& wp : s.blocks) {
            draw_disc(img, wp, cfg.waypoint_radius, 0.6, cfg.grid, false);
        }
    } else {
        for (const Vec2& blk : s.blocks) {
            draw_disc(img, blk, cfg.block_radius, 0.6, cfg.grid, cfg.ood_square_blocks);
        }
    }
    if (cfg.agent_radius > 0.0) {
        draw_disc(img, s.agent, cfg.agent_radius, 1.0, cfg.grid, false);
    }
    return img;
}

Observation observe(const WorldState& s, const EnvConfig& cfg) {
    Observation o;
    o.image = render(s, cfg);
    o.proprio = Tensor::vec({s.agent.x, s.agent.y, s.carrying >= 0 ? 1.0 : 0.0});
    return o;
}

bool success(const WorldState& s, const GoalSpec& g, const EnvConfig& cfg) {
    if (cfg.task == Task::Trace) {
        return s.progress >= g.goal_state.progress;
    }
    for (int b = 0; b < cfg.blocks; ++b) {
        if (dist(s.blocks[static_cast<size_t>(b)], g.goal_state.blocks[static_cast<size_t>(b)]) >
            cfg.success_eps) {
            return false;
        }
    }
    return true;
}

Action scripted_expert(const WorldState& s, const GoalSpec& g,
                       const std::vector<Vec2>& block_goals, const EnvConfig& cfg) {
    Action act;
    if (cfg.task == Task::Trace) {
        const int n = g.goal_state.progress;
        if (s.progress >= n) {
            return act;
        }
        const Vec2 target = s.blocks[static_cast<size_t>(s.progress)];
        act.dx = clamp_abs(target.x - s.agent.x, cfg.a_max);
        act.dy = clamp_abs(target.y - s.agent.y, cfg.a_max);
        return act;
    }
    const double pick_dist = 0.5 * cfg.grip_radius;
    const double place_eps = 0.5 * cfg.success_eps;
    if (s.carrying >= 0 && s.carrying < cfg.blocks) {
        const int b = s.carrying;
        const Vec2 blk = s.blocks[static_cast<size_t>(b)];
        const Vec2 goal = block_goals[static_cast<size_t>(b)];
        if (dist(blk, goal) <= place_eps) {
            return act;  // release and hold still
        }
        const Vec2 target{goal.x + (s.agent.x - blk.x), goal.y + (s.agent.y - blk.y)};
        act.dx = clamp_abs(target.x - s.agent.x, cfg.a_max);
        act.dy = clamp_abs(target.y - s.agent.y, cfg.a_max);
        act.grip = true;
        return act;
    }
    int best = -1;
    double best_d = 1e9;
    for (int b = 0; b < cfg.blocks; ++b) {
        if (dist(s.blocks[static_cast<size_t>(b)], block_goals[static_cast<size_t>(b)]) <= place_eps) {
            continue;
        }
        const double d = dist(s.agent, s.blocks[static_cast<size_t>(b)]);
        if (d < best_d) {
            best_d = d;
            best = b;
        }
    }
    if (best < 0) {
        return act;  // everything placed
    }
    const Vec2 blk = s.blocks[static_cast<size_t>(best)];
    act.dx = clamp_abs(blk.x - s.agent.x, cfg.a_max);
    act.dy = clamp_abs(blk.y - s.agent.y, cfg.a_max);
    act.grip = best_d <= pick_dist;
    return act;
}

WorldState inject_disturbance(const WorldState& s, const EnvConfig& cfg, uint64_t seed) {
    Rng rng = Rng(seed).fork(stream::kDisturb);
    WorldState ns = s;
    const double b = cfg.disturb_bound;
    if (cfg.task == Task::Push) {
        const int idx = rng.uniform_int(cfg.blocks);
        Vec2& blk = ns.blocks[static_cast<size_t>(idx)];
        const double ox = rng.uniform(-b, b);
        const double oy = rng.uniform(-b, b);
        blk.x = clamp01(blk.x + ox);
        blk.y = clamp01(blk.y + oy);
        if (ns.carrying == idx && (ox != 0.0 || oy != 0.0)) {
            ns.carrying = -1;  // knocked out of the gripper
        }
    } else {
        ns.agent.x = clamp01(ns.agent.x + rng.uniform(-b, b));
        ns.agent.y = clamp01(ns.agent.y + rng.uniform(-b, b));
    }
    return ns;
}

ResetResult reset(const EnvConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng base = Rng(seed).fork(stream::kEnv);
    for (int attempt = 0; attempt < kResetAttempts; ++attempt) {
        Rng rng = base.fork(static_cast<uint64_t>(attempt));
        SampledInstance inst = sample_instance(cfg, rng);
        if (cfg.task == Task::Push && inst.state.blocks.empty()) {
            continue;
        }
        // solve with the scripted expert; the achieved terminal state becomes
        // the goal, so every goal image is reachable by construction
        GoalSpec target_goal;
        target_goal.goal_state = inst.state;
        if (cfg.task == Task::Trace) {
            target_goal.goal_state.progress = static_cast<int>(inst.state.blocks.size());
        }
        WorldState cur = inst.state;
        const int limit = episode_step_limit(cfg, static_cast<int>(inst.state.blocks.size()));
        bool solved = false;
        int steps = 0;
        for (; steps < limit; ++steps) {
            if (cfg.task == Task::Trace) {
                if (cur.progress >= target_goal.goal_state.progress) {
                    solved = true;
                    break;
                }
            } else {
                bool all = true;
                for (int b = 0; b < cfg.blocks; ++b) {
                    all = all && dist(cur.blocks[static_cast<size_t>(b)],
                                      inst.block_goals[static_cast<size_t>(b)]) <= cfg.success_eps;
                }
                if (all && cur.carrying < 0) {
                    solved = true;
                    break;
                }
            }
            const Action a = scripted_expert(cur, target_goal, inst.block_goals, cfg);
            cur = step(cur, a, cfg);
        }
        if (!solved) {
            continue;
        }
        ResetResult rr;
        rr.state = inst.state;
        rr.goal.goal_state = cur;
        rr.goal.goal_image = render(cur, cfg);
        rr.obs = observe(inst.state, cfg);
        rr.block_goals = inst.block_goals;
        rr.expert_steps = steps;
        return rr;
    }
    throw std::runtime_error("env reset: no solvable instance after " +
                             std::to_string(kResetAttempts) + " attempts (seed " +
                             std::to_string(seed) + ")");
}

Trajectory run_expert_episode(const EnvConfig& cfg, uint64_t seed) {
    const ResetResult rr = reset(cfg, seed);
    WorldState cur = rr.state;
    Trajectory traj;
    traj.seed = seed;
    std::vector<double> action_rows;
    const int limit = episode_step_limit(cfg, static_cast<int>(rr.state.blocks.size()));
    for (int t = 0; t <= limit; ++t) {
        const Observation obs = observe(cur, cfg);
        traj.images.push_back(obs.image);
        traj.proprios.push_back(obs.proprio);
        if (success(cur, rr.goal, cfg) && cur.carrying < 0) {
            break;
        }
        const Action a = scripted_expert(cur, rr.goal, rr.block_goals, cfg);
        action_rows.push_back(a.dx);
        action_rows.push_back(a.dy);
        action_rows.push_back(a.grip ? 1.0 : 0.0);
        cur = step(cur, a, cfg);
    }
    const int T = static_cast<int>(traj.images.size()) - 1;
    traj.actions = Tensor::matrix(T, 3, std::move(action_rows));
    traj.goal_image = traj.images.back();
    traj.validate();
    return traj;
}

std::vector<Trajectory> generate_demos(const EnvConfig& cfg, int n_episodes, uint64_t seed) {
    if (n_episodes < 1) {
        throw std::invalid_argument("generate_demos: n_episodes must be >= 1");
    }
    std::vector<Trajectory> out;
    out.reserve(static_cast<size_t>(n_episodes));
    for (int i = 0; i < n_episodes; ++i) {
        out.push_back(run_expert_episode(cfg, seed + static_cast<uint64_t>(i)));
    }
    return out;
}

}  // namespace a2g
