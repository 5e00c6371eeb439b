#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "a2g/harness.hpp"
#include "a2g/trainkit.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out = ".";
    uint64_t seed = 0;
    bool seed_set = false;
};

uint64_t effective_seed(const CommonArgs& a, const a2g::RunConfig& cfg) {
    return a.seed_set ? a.seed : cfg.seed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"goal-conditioned flow-matching policy: demos, training, evaluation, online improvement"};
    app.require_subcommand(1);

    CommonArgs common;
    auto add_common = [&common](CLI::App* sub, bool needs_out) {
        sub->add_option("--config", common.config, "run config file (key = value lines)")->required();
        sub->add_option("--seed", common.seed, "override run.seed")->each([&common](const std::string&) {
            common.seed_set = true;
        });
        if (needs_out) {
            sub->add_option("--out", common.out, "output directory")->required();
        }
    };

    // gen-demos
    auto* gen = app.add_subcommand("gen-demos", "generate scripted-expert demonstrations");
    int gen_n = 100;
    std::string gen_out;
    gen->add_option("--config", common.config, "run config file")->required();
    gen->add_option("--seed", common.seed)->each([&common](const std::string&) { common.seed_set = true; });
    gen->add_option("--n", gen_n, "episode count")->required();
    gen->add_option("--out", gen_out, "output dataset path")->required();

    // train stages
    auto* tr1 = app.add_subcommand("train-stage1", "joint flow-matching training of both networks");
    auto* tr2 = app.add_subcommand("train-stage2", "action-loss end-to-end finetuning");
    std::string dataset_path;
    std::string bundle_in;
    for (CLI::App* sub : {tr1, tr2}) {
        add_common(sub, true);
        sub->add_option("--dataset", dataset_path, "demonstration dataset")->required();
    }
    tr2->add_option("--bundle", bundle_in, "stage-1 bundle")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "frozen-policy evaluation");
    std::string eval_bundle;
    std::string variant = "id";
    int episodes = 50;
    bool disturb = false;
    add_common(ev, true);
    ev->add_option("--bundle", eval_bundle, "trained bundle")->required();
    ev->add_option("--episodes", episodes, "episode count");
    ev->add_option("--variant", variant, "id | ood");
    ev->add_flag("--disturb", disturb, "inject one mid-episode disturbance per episode");

    // ablate-msth
    auto* ab = app.add_subcommand("ablate-msth", "multi-scale schedule vs fixed-horizon baseline");
    add_common(ab, true);

    // online-improve
    auto* on = app.add_subcommand("online-improve", "reward-free online adapter finetuning");
    std::string online_bundle;
    std::string strategy = "all";
    std::string online_variant = "ood";
    int rounds = -1;
    bool resume = false;
    add_common(on, true);
    on->add_option("--bundle", online_bundle, "offline-trained bundle")->required();
    on->add_option("--rounds", rounds, "training rounds (default from config)");
    on->add_option("--strategy", strategy, "all | success_only | failed_only");
    on->add_option("--variant", online_variant, "id | ood");
    on->add_flag("--resume", resume, "continue from the latest round snapshot in --out");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints help/error
        return 2;
    }

    try {
        const a2g::RunConfig cfg = a2g::parse_run_config(common.config);
        const uint64_t seed = effective_seed(common, cfg);
        if (gen->parsed()) {
            a2g::cmd_gen_demos(cfg, gen_n, gen_out, seed);
        } else if (tr1->parsed()) {
            a2g::cmd_train(cfg, 1, dataset_path, "", common.out, seed);
        } else if (tr2->parsed()) {
            a2g::cmd_train(cfg, 2, dataset_path, bundle_in, common.out, seed);
        } else if (ev->parsed()) {
            a2g::cmd_eval(cfg, eval_bundle, episodes, a2g::variant_from_name(variant), disturb,
                          common.out, seed);
        } else if (ab->parsed()) {
            a2g::cmd_ablate_msth(cfg, common.out, seed);
        } else if (on->parsed()) {
            a2g::cmd_online(cfg, online_bundle, rounds < 0 ? cfg.online.rounds : rounds, strategy,
                            a2g::variant_from_name(online_variant), common.out, seed, resume);
        }
        return 0;
    } catch (const a2g::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const a2g::FingerprintError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
