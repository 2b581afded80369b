// wcse: shuffled-group-whitening contrastive learning at toy scale.
//
//   wcse gen     --out PREFIX [--clusters N --per-cluster N --dim D --noise S --anisotropy A]
//   wcse whiten  --input F.wemb --out G.wemb --kind {pca,zca,group,sgw} [--group-size g]
//   wcse train   [--config C] [--data PREFIX] --checkpoint CK --out REPORT [--<key> value]
//   wcse eval    --checkpoint CK [--config C] [--data PREFIX] [--out REPORT]
//   wcse ablate  [--config C] --sweep key=v1,v2 --out REPORT
//
// Exit codes: 0 success, 1 validation error, 2 numeric failure.

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "wcse/commands.hpp"
#include "wcse/errors.hpp"

namespace {

// Every TrainConfig key is also a flag; values given on the command line
// override the config file.
struct ConfigFlags {
    std::optional<std::string> path;
    std::map<std::string, std::string> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", path, "Config file (key = value lines)");
        for (const auto& key : wcse::TrainConfig::keys()) {
            cmd->add_option_function<std::string>(
                "--" + key, [this, key](const std::string& v) { overrides[key] = v; },
                "Override config key " + key);
        }
    }

    wcse::TrainConfig resolve() const {
        wcse::TrainConfig config = path ? wcse::load_config(*path) : wcse::TrainConfig{};
        for (const auto& [key, value] : overrides) config.set(key, value);
        config.validate();
        return config;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Whitening-based contrastive learning toolkit"};
    app.require_subcommand(1);

    wcse::GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic clustered dataset");
    gen_cmd->add_option("--out", gen.out_prefix, "Output prefix")->required();
    gen_cmd->add_option("--clusters", gen.clusters);
    gen_cmd->add_option("--per-cluster", gen.per_cluster);
    gen_cmd->add_option("--dim", gen.dim);
    gen_cmd->add_option("--noise", gen.noise);
    gen_cmd->add_option("--anisotropy", gen.anisotropy, "Squeeze samples into a cone");
    gen_cmd->add_option("--seed", gen.seed);

    wcse::WhitenOptions whiten;
    auto* whiten_cmd = app.add_subcommand("whiten", "Whiten an embedding file");
    whiten_cmd->add_option("--input", whiten.input)->required();
    whiten_cmd->add_option("--out", whiten.output)->required();
    whiten_cmd->add_option("--kind", whiten.kind)
        ->check(CLI::IsMember({"pca", "zca", "group", "sgw"}));
    whiten_cmd->add_option("--group-size", whiten.group_size);
    whiten_cmd->add_option("--ridge", whiten.ridge);
    whiten_cmd->add_option("--seed", whiten.seed);

    ConfigFlags train_flags;
    wcse::TrainOptions train;
    std::optional<std::string> train_data;
    auto* train_cmd = app.add_subcommand("train", "Train the toy encoder");
    train_flags.attach(train_cmd);
    train_cmd->add_option("--data", train_data, "Dataset prefix written by gen");
    train_cmd->add_option("--checkpoint", train.checkpoint_out, "Best checkpoint output");
    train_cmd->add_option("--out", train.report_out, "Report output")->required();

    ConfigFlags eval_flags;
    wcse::EvalOptions eval;
    std::optional<std::string> eval_data;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_flags.attach(eval_cmd);
    eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
    eval_cmd->add_option("--data", eval_data);
    eval_cmd->add_option("--out", eval.report_out);

    ConfigFlags ablate_flags;
    wcse::AblateOptions ablate;
    std::optional<std::string> ablate_data;
    std::string sweep;
    auto* ablate_cmd = app.add_subcommand("ablate", "Train once per swept setting");
    ablate_flags.attach(ablate_cmd);
    ablate_cmd->add_option("--sweep", sweep, "key=v1,v2,...")->required();
    ablate_cmd->add_option("--data", ablate_data);
    ablate_cmd->add_option("--out", ablate.report_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen_cmd) {
            wcse::cmd_gen(gen, std::cout);
        } else if (*whiten_cmd) {
            wcse::cmd_whiten(whiten, std::cout);
        } else if (*train_cmd) {
            train.config = train_flags.resolve();
            train.data_prefix = train_data;
            wcse::cmd_train(train, std::cout);
        } else if (*eval_cmd) {
            eval.config = eval_flags.resolve();
            eval.data_prefix = eval_data;
            wcse::cmd_eval(eval, std::cout);
        } else if (*ablate_cmd) {
            ablate.config = ablate_flags.resolve();
            ablate.sweep = wcse::parse_sweep(sweep);
            ablate.data_prefix = ablate_data;
            wcse::cmd_ablate(ablate, std::cout);
        }
    } catch (const wcse::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.is_numeric() ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
