#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "dtn/api.hpp"

namespace {

using OverrideList = std::vector<std::pair<std::string, std::string>>;

// Every flag maps 1:1 onto a config-file key; precedence is
// defaults < --config file < explicit flags.
void add_override_flag(CLI::App* cmd, OverrideList& overrides, const std::string& flag,
                       const std::string& key, const std::string& description) {
    cmd->add_option_function<std::string>(
        flag, [&overrides, key](const std::string& value) { overrides.emplace_back(key, value); },
        description);
}

void add_run_flags(CLI::App* cmd, OverrideList& overrides) {
    add_override_flag(cmd, overrides, "--seed", "seed", "root seed for all random streams");
    add_override_flag(cmd, overrides, "--data", "data",
                      "dtn-embed dataset file (default: synthetic data)");
    add_override_flag(cmd, overrides, "--data-seed", "data_seed",
                      "seed for the synthetic data stream (default: the run seed)");
    add_override_flag(cmd, overrides, "--n-way", "n_way", "classes per episode (N)");
    add_override_flag(cmd, overrides, "--k-shot", "k_shot", "support samples per class (K)");
    add_override_flag(cmd, overrides, "--queries", "queries", "query samples per class (Q)");
    add_override_flag(cmd, overrides, "--h-gen", "h_gen", "reference pairs per episode (H)");
    add_override_flag(cmd, overrides, "--train-classes", "train_classes",
                      "class count of the train split");
    add_override_flag(cmd, overrides, "--val-classes", "val_classes",
                      "class count of the validation split");
    add_override_flag(cmd, overrides, "--test-classes", "test_classes",
                      "class count of the test split");
    add_override_flag(cmd, overrides, "--merge-val", "merge_val",
                      "fold validation classes into train (default: true)");
    add_override_flag(cmd, overrides, "--classes", "classes", "synthetic class count");
    add_override_flag(cmd, overrides, "--dim", "dim", "synthetic input dimension");
    add_override_flag(cmd, overrides, "--samples-per-class", "samples_per_class",
                      "synthetic samples per class");
    add_override_flag(cmd, overrides, "--variation-dims", "variation_dims",
                      "shared variation subspace dimension");
    add_override_flag(cmd, overrides, "--variation-scale", "variation_scale",
                      "within-class variation scale");
    add_override_flag(cmd, overrides, "--noise-scale", "noise_scale", "isotropic noise scale");
}

void add_schedule_flags(CLI::App* cmd, OverrideList& overrides) {
    add_override_flag(cmd, overrides, "--schedule", "schedule",
                      "training schedule: oat, at, naive or two-stage");
    add_override_flag(cmd, overrides, "--unit-epochs", "unit_epochs", "OAT epochs per unit (T)");
    add_override_flag(cmd, overrides, "--gamma", "gamma",
                      "OAT meta epochs per unit, comma list (default 0,0,1,1,2,2)");
    add_override_flag(cmd, overrides, "--at-decay", "at_decay", "AT anneal decay in (0,1)");
    add_override_flag(cmd, overrides, "--epochs", "epochs", "total epochs for at/naive");
    add_override_flag(cmd, overrides, "--aux-epochs", "aux_epochs",
                      "two-stage auxiliary epoch count");
    add_override_flag(cmd, overrides, "--meta-epochs", "meta_epochs",
                      "two-stage meta epoch count");
}

void add_train_flags(CLI::App* cmd, OverrideList& overrides) {
    add_override_flag(cmd, overrides, "--batch-size", "batch_size", "auxiliary batch size");
    add_override_flag(cmd, overrides, "--aux-steps", "aux_steps",
                      "minibatch steps per auxiliary epoch");
    add_override_flag(cmd, overrides, "--episodes-per-epoch", "episodes_per_epoch",
                      "episodes per meta epoch");
    add_override_flag(cmd, overrides, "--lr-aux", "lr_aux", "auxiliary learning rate");
    add_override_flag(cmd, overrides, "--lr-meta", "lr_meta", "meta learning rate");
    add_override_flag(cmd, overrides, "--momentum", "momentum", "SGD momentum");
    add_override_flag(cmd, overrides, "--eval-every", "eval_every",
                      "validation eval period in epochs (0 = off)");
    add_override_flag(cmd, overrides, "--feature-dim", "model.feature_dim",
                      "extractor feature width (C)");
    add_override_flag(cmd, overrides, "--latent-dim", "model.latent_dim",
                      "generator latent width (C')");
    add_override_flag(cmd, overrides, "--hidden-dims", "model.hidden_dims",
                      "extractor hidden widths, comma list");
    add_override_flag(cmd, overrides, "--dropout", "model.dropout_rate",
                      "generator dropout rate");
}

dtn::RunConfig make_config(dtn::RunConfig base, const std::string& config_path,
                           const OverrideList& overrides) {
    if (!config_path.empty()) {
        dtn::apply_config_file(base, config_path);
    }
    for (const auto& [key, value] : overrides) {
        dtn::apply_key_value(base, key, value);
    }
    return base;
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Timestamps are confined to run.log so every other output file is a pure
// function of the config.
void log_line(const std::string& out_dir, const std::string& message) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    std::ofstream log(out_dir + "/run.log", std::ios::app);
    log << '[' << timestamp() << "] " << message << '\n';
}

std::string format_accuracy(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

int cmd_train(const dtn::RunConfig& cfg) {
    log_line(cfg.out_dir, "train started (seed " + std::to_string(cfg.seed) + ")");
    const dtn::TrainResult result = dtn::run_training(cfg);
    log_line(cfg.out_dir, "train finished");
    std::cout << "trained " << result.metrics.size() << " epochs, schedule "
              << result.schedule_string << "\n";
    if (!result.checkpoint_path.empty()) {
        std::cout << "checkpoint: " << result.checkpoint_path << "\n"
                  << "metrics:    " << cfg.out_dir << "/metrics.csv\n";
    }
    return 0;
}

int cmd_eval(const dtn::RunConfig& cfg) {
    const dtn::EvalReport report = dtn::run_eval(cfg);
    std::cout << format_accuracy(report.mean_accuracy) << " ± "
              << (report.ci95 ? format_accuracy(*report.ci95) : std::string("n/a")) << " over "
              << report.episode_count << " episodes\n";
    return 0;
}

int cmd_ablate(const dtn::RunConfig& cfg, const std::string& sweep, std::size_t n_seeds) {
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < n_seeds; ++i) seeds.push_back(cfg.seed + i);
    log_line(cfg.out_dir, "ablate started (sweep " + sweep + ")");
    const dtn::AblateResult result = dtn::run_ablate(cfg, sweep, seeds);
    log_line(cfg.out_dir, "ablate finished");

    std::string runs_csv = "arm,seed,accuracy,ci95\n";
    for (const auto& row : result.rows) {
        runs_csv += row.arm + "," + std::to_string(row.seed) + "," +
                    format_accuracy(row.accuracy) + "," + format_accuracy(row.ci95) + "\n";
    }
    std::string summary_csv = "arm,mean_accuracy,std_accuracy\n";
    for (const auto& row : result.summary) {
        summary_csv += row.arm + "," + format_accuracy(row.mean_accuracy) + "," +
                       format_accuracy(row.std_accuracy) + "\n";
    }
    std::cout << runs_csv << "\n" << summary_csv;
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream(cfg.out_dir + "/ablate_runs.csv") << runs_csv;
        std::ofstream(cfg.out_dir + "/ablate_summary.csv") << summary_csv;
    }
    return 0;
}

int cmd_gen_data(const dtn::RunConfig& cfg, const std::string& out_file) {
    dtn::SyntheticSpec spec = cfg.synthetic;
    spec.seed = cfg.data_seed.value_or(cfg.seed);
    const dtn::Dataset ds = dtn::gen_synthetic(spec);
    dtn::save_embeddings(ds, out_file);
    std::cout << "wrote " << ds.items.size() << " items (" << ds.num_classes() << " classes, dim "
              << ds.dim << ") to " << out_file << "\n";
    return 0;
}

int cmd_export(const dtn::RunConfig& cfg) {
    const std::string csv = dtn::export_embeddings_csv(cfg);
    const std::size_t rows = std::count(csv.begin(), csv.end(), '\n') - 1;
    if (!cfg.out_dir.empty()) {
        std::cout << "wrote " << rows << " feature rows to " << cfg.out_dir << "/features.csv\n";
    } else {
        std::cout << csv;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "dtn: few-shot classification via diversity-transfer feature generation.\n"
        "Config precedence: built-in defaults < --config file (key=value lines) < flags."};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint, resume, sweep = "strategy", gen_out;
    std::size_t n_seeds = 5;
    OverrideList overrides;

    CLI::App* train = app.add_subcommand("train", "train a model and write checkpoint + metrics");
    train->add_option("--config", config_path, "key=value config file");
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--resume", resume, "checkpoint to resume from");
    add_run_flags(train, overrides);
    add_schedule_flags(train, overrides);
    add_train_flags(train, overrides);
    add_override_flag(train, overrides, "--episodes", "episodes_per_epoch",
                      "episodes per meta epoch");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint over test episodes");
    eval->add_option("--config", config_path, "key=value config file");
    eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    eval->add_option("--out", out_dir, "output directory for per-episode accuracies");
    add_run_flags(eval, overrides);
    add_override_flag(eval, overrides, "--episodes", "eval_episodes",
                      "number of evaluation episodes (E)");
    add_override_flag(eval, overrides, "--workers", "workers", "parallel evaluation workers");
    add_override_flag(eval, overrides, "--split", "eval_split", "test or val");

    CLI::App* ablate = app.add_subcommand("ablate", "strategy or H sweep with per-arm summary");
    ablate->add_option("--config", config_path, "key=value config file");
    ablate->add_option("--out", out_dir, "output directory");
    ablate->add_option("--sweep", sweep, "sweep kind: strategy or h")
        ->check(CLI::IsMember({"strategy", "h"}));
    ablate->add_option("--seeds", n_seeds, "number of seeds (seed, seed+1, ...)");
    add_run_flags(ablate, overrides);
    add_schedule_flags(ablate, overrides);
    add_train_flags(ablate, overrides);
    add_override_flag(ablate, overrides, "--episodes", "eval_episodes",
                      "evaluation episodes per arm");

    CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dtn-embed dataset");
    gen->add_option("--config", config_path, "key=value config file");
    gen->add_option("--out", gen_out, "output file")->required();
    add_run_flags(gen, overrides);

    CLI::App* exp = app.add_subcommand("export-embeddings",
                                       "export real/support/generated features of one episode");
    exp->add_option("--config", config_path, "key=value config file");
    exp->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    exp->add_option("--out", out_dir, "output directory for features.csv");
    add_run_flags(exp, overrides);
    add_override_flag(exp, overrides, "--phase", "phase",
                      "split the episode is drawn from: train or test");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        // eval and export default every setting to the config the checkpoint
        // was trained with; the config file and flags override from there.
        dtn::RunConfig base;
        if ((eval->parsed() || exp->parsed()) && !checkpoint.empty()) {
            base = dtn::config_from_checkpoint(checkpoint);
        }
        dtn::RunConfig cfg = make_config(std::move(base), config_path, overrides);
        cfg.out_dir = out_dir;
        cfg.checkpoint_path = checkpoint;
        cfg.resume_path = resume;

        if (train->parsed()) return cmd_train(cfg);
        if (eval->parsed()) return cmd_eval(cfg);
        if (ablate->parsed()) return cmd_ablate(cfg, sweep, n_seeds);
        if (gen->parsed()) return cmd_gen_data(cfg, gen_out);
        if (exp->parsed()) return cmd_export(cfg);
        return 1;
    } catch (const dtn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const dtn::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
