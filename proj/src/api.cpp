#include "dtn/api.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dtn/checkpoint.hpp"

namespace dtn {

namespace {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing chars");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer '" + value + "' for key " + key);
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing chars");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number '" + value + "' for key " + key);
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
    if (value == "0" || value == "false" || value == "no" || value == "off") return false;
    throw ConfigError("config: bad boolean '" + value + "' for key " + key);
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::istringstream is(value);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (!tok.empty()) out.push_back(parse_u64(key, tok));
    }
    return out;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw Error("write to '" + path + "' failed");
}

}  // namespace

void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "seed") {
        cfg.seed = parse_u64(key, value);
    } else if (key == "data") {
        cfg.data_path = value;
    } else if (key == "data_seed") {
        cfg.data_seed = parse_u64(key, value);
    } else if (key == "classes") {
        cfg.synthetic.class_count = parse_u64(key, value);
    } else if (key == "dim") {
        cfg.synthetic.dim = parse_u64(key, value);
    } else if (key == "samples_per_class") {
        cfg.synthetic.samples_per_class = parse_u64(key, value);
    } else if (key == "variation_dims") {
        cfg.synthetic.variation_dims = parse_u64(key, value);
    } else if (key == "variation_scale") {
        cfg.synthetic.variation_scale = parse_double(key, value);
    } else if (key == "noise_scale") {
        cfg.synthetic.noise_scale = parse_double(key, value);
    } else if (key == "train_classes") {
        cfg.train_class_count = parse_u64(key, value);
    } else if (key == "val_classes") {
        cfg.val_class_count = parse_u64(key, value);
    } else if (key == "test_classes") {
        cfg.test_class_count = parse_u64(key, value);
    } else if (key == "merge_val") {
        cfg.merge_val = parse_bool(key, value);
    } else if (key == "n_way") {
        cfg.episode.n_way = parse_u64(key, value);
    } else if (key == "k_shot") {
        cfg.episode.k_shot = parse_u64(key, value);
    } else if (key == "queries") {
        cfg.episode.queries = parse_u64(key, value);
    } else if (key == "h_gen") {
        cfg.episode.n_pairs = parse_u64(key, value);
    } else if (key == "schedule") {
        cfg.schedule.kind = schedule_kind_from_name(value);
    } else if (key == "unit_epochs") {
        cfg.schedule.unit_epochs = parse_u64(key, value);
    } else if (key == "gamma") {
        cfg.schedule.gamma = parse_size_list(key, value);
    } else if (key == "at_decay") {
        cfg.schedule.at_decay = parse_double(key, value);
    } else if (key == "epochs") {
        cfg.schedule.total_epochs = parse_u64(key, value);
    } else if (key == "aux_epochs") {
        cfg.schedule.aux_epochs = parse_u64(key, value);
    } else if (key == "meta_epochs") {
        cfg.schedule.meta_epochs = parse_u64(key, value);
    } else if (key == "batch_size") {
        cfg.train.batch_size = parse_u64(key, value);
    } else if (key == "aux_steps") {
        cfg.train.aux_steps_per_epoch = parse_u64(key, value);
    } else if (key == "episodes_per_epoch") {
        cfg.train.episodes_per_epoch = parse_u64(key, value);
    } else if (key == "lr_aux") {
        cfg.train.lr_aux = parse_double(key, value);
    } else if (key == "lr_meta") {
        cfg.train.lr_meta = parse_double(key, value);
    } else if (key == "momentum") {
        cfg.train.momentum = parse_double(key, value);
    } else if (key == "max_skip_fraction") {
        cfg.train.max_skip_fraction = parse_double(key, value);
    } else if (key == "eval_every") {
        cfg.train.eval_every = parse_u64(key, value);
    } else if (key == "train_eval_episodes") {
        cfg.train.eval_episodes = parse_u64(key, value);
    } else if (key == "eval_episodes") {
        cfg.eval_episodes = parse_u64(key, value);
    } else if (key == "eval_split") {
        if (value != "test" && value != "val") {
            throw ConfigError("config: eval_split must be 'test' or 'val'");
        }
        cfg.eval_split = value;
    } else if (key == "workers") {
        cfg.workers = std::max<std::size_t>(1, parse_u64(key, value));
    } else if (key == "phase") {
        if (value != "train" && value != "test") {
            throw ConfigError("config: phase must be 'train' or 'test'");
        }
        cfg.phase = value;
    } else if (key == "model.input_dim") {
        cfg.model.input_dim = parse_u64(key, value);
    } else if (key == "model.hidden_dims") {
        cfg.model.hidden_dims = parse_size_list(key, value);
    } else if (key == "model.feature_dim") {
        cfg.model.feature_dim = parse_u64(key, value);
    } else if (key == "model.latent_dim") {
        cfg.model.latent_dim = parse_u64(key, value);
    } else if (key == "model.dropout_rate") {
        cfg.model.dropout_rate = parse_double(key, value);
    } else if (key == "model.leaky_slope") {
        cfg.model.leaky_slope = parse_double(key, value);
    } else if (key == "model.n_aux_classes") {
        cfg.model.n_aux_classes = parse_u64(key, value);
    } else if (key == "model.alpha_init") {
        cfg.model.alpha_init = parse_double(key, value);
    } else if (key == "model.aux_normalize_rows") {
        cfg.model.aux_normalize_rows = parse_bool(key, value);
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key=value, got '" + line + "'");
        }
        apply_key_value(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    apply_config_text(cfg, ss.str());
}

RunConfig load_config_file(const std::string& path) {
    RunConfig cfg;
    apply_config_file(cfg, path);
    return cfg;
}

RunConfig config_from_checkpoint(const std::string& path) {
    RunConfig cfg;
    apply_config_text(cfg, load_checkpoint(path).config_text);
    return cfg;
}

std::string run_config_text(const RunConfig& cfg) {
    std::ostringstream os;
    os << "seed=" << cfg.seed << "\n";
    if (!cfg.data_path.empty()) os << "data=" << cfg.data_path << "\n";
    if (cfg.data_seed) os << "data_seed=" << *cfg.data_seed << "\n";
    os << "classes=" << cfg.synthetic.class_count << "\n";
    os << "dim=" << cfg.synthetic.dim << "\n";
    os << "samples_per_class=" << cfg.synthetic.samples_per_class << "\n";
    os << "variation_dims=" << cfg.synthetic.variation_dims << "\n";
    os << "variation_scale=" << fmt_double(cfg.synthetic.variation_scale) << "\n";
    os << "noise_scale=" << fmt_double(cfg.synthetic.noise_scale) << "\n";
    os << "train_classes=" << cfg.train_class_count << "\n";
    os << "val_classes=" << cfg.val_class_count << "\n";
    os << "test_classes=" << cfg.test_class_count << "\n";
    os << "merge_val=" << (cfg.merge_val ? 1 : 0) << "\n";
    os << "n_way=" << cfg.episode.n_way << "\n";
    os << "k_shot=" << cfg.episode.k_shot << "\n";
    os << "queries=" << cfg.episode.queries << "\n";
    os << "h_gen=" << cfg.episode.n_pairs << "\n";
    os << "schedule=" << schedule_kind_name(cfg.schedule.kind) << "\n";
    os << "unit_epochs=" << cfg.schedule.unit_epochs << "\n";
    os << "gamma=";
    for (std::size_t i = 0; i < cfg.schedule.gamma.size(); ++i) {
        if (i) os << ',';
        os << cfg.schedule.gamma[i];
    }
    os << "\n";
    os << "at_decay=" << fmt_double(cfg.schedule.at_decay) << "\n";
    os << "epochs=" << cfg.schedule.total_epochs << "\n";
    os << "aux_epochs=" << cfg.schedule.aux_epochs << "\n";
    os << "meta_epochs=" << cfg.schedule.meta_epochs << "\n";
    os << "batch_size=" << cfg.train.batch_size << "\n";
    os << "aux_steps=" << cfg.train.aux_steps_per_epoch << "\n";
    os << "episodes_per_epoch=" << cfg.train.episodes_per_epoch << "\n";
    os << "lr_aux=" << fmt_double(cfg.train.lr_aux) << "\n";
    os << "lr_meta=" << fmt_double(cfg.train.lr_meta) << "\n";
    os << "momentum=" << fmt_double(cfg.train.momentum) << "\n";
    os << "max_skip_fraction=" << fmt_double(cfg.train.max_skip_fraction) << "\n";
    os << "eval_every=" << cfg.train.eval_every << "\n";
    os << "train_eval_episodes=" << cfg.train.eval_episodes << "\n";
    os << "eval_episodes=" << cfg.eval_episodes << "\n";
    os << "eval_split=" << cfg.eval_split << "\n";
    os << "workers=" << cfg.workers << "\n";
    os << "phase=" << cfg.phase << "\n";
    os << model_config_text(cfg.model);
    return os.str();
}

Dataset build_dataset(const RunConfig& cfg) {
    Dataset ds;
    if (!cfg.data_path.empty()) {
        ds = load_embeddings(cfg.data_path);
    } else {
        SyntheticSpec spec = cfg.synthetic;
        spec.seed = cfg.data_seed.value_or(cfg.seed);
        ds = gen_synthetic(spec);
    }
    return split_by_counts(std::move(ds), cfg.train_class_count, cfg.val_class_count,
                           cfg.test_class_count, cfg.merge_val);
}

TrainResult run_training(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    Checkpoint resume;
    const bool resuming = !cfg.resume_path.empty();
    if (resuming) {
        resume = load_checkpoint(cfg.resume_path);
        RunConfig snap;
        apply_config_text(snap, resume.config_text);
        snap.out_dir = cfg.out_dir;
        snap.resume_path = cfg.resume_path;
        cfg = snap;
    }
    cfg.schedule.seed = cfg.seed;

    Dataset ds = build_dataset(cfg);
    cfg.model.input_dim = ds.dim;
    cfg.model.n_aux_classes = ds.classes_in(Split::Train).size();
    if (cfg.model.n_aux_classes == 0) {
        throw ConfigError("run_training: no train classes after the split");
    }

    const auto schedule = build_schedule(cfg.schedule);
    const std::string schedule_string = schedule_to_string(schedule);
    if (resuming && resume.schedule_string != schedule_string) {
        throw CheckpointError("resume: checkpoint schedule '" + resume.schedule_string +
                              "' does not match rebuilt schedule '" + schedule_string + "'");
    }

    SeededRng init_rng = SeededRng::stream(cfg.seed, "init");
    ModelState state = init_model(cfg.model, init_rng);
    Optimizer opt(state, cfg.train.momentum);
    TrainerRngs rngs = TrainerRngs::from_root(cfg.seed);

    std::size_t start_epoch = 0;
    if (resuming) {
        restore_training(state, opt, rngs, resume);
        start_epoch = resume.next_epoch;
    }

    TrainResult result;
    result.schedule_string = schedule_string;
    result.metrics =
        run_schedule(state, schedule, ds, cfg.episode, cfg.train, opt, rngs, start_epoch);

    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        write_file(cfg.out_dir + "/metrics.csv", metrics_to_csv(result.metrics));
        write_file(cfg.out_dir + "/schedule.txt", schedule_string + "\n");
        const Checkpoint final_ckpt = make_training_checkpoint(
            state, opt, rngs, schedule_string, schedule.size(), run_config_text(cfg));
        result.checkpoint_path = cfg.out_dir + "/checkpoint.dtnc";
        save_checkpoint(final_ckpt, result.checkpoint_path);
    }
    result.state = std::move(state);
    return result;
}

LoadedModel load_model_checkpoint(const std::string& path) {
    const Checkpoint ckpt = load_checkpoint(path);
    LoadedModel lm;
    apply_config_text(lm.config, ckpt.config_text);
    lm.schedule_string = ckpt.schedule_string;

    SeededRng dummy(0);  // values are overwritten by the checkpoint
    lm.state = init_model(lm.config.model, dummy);
    restore_model(lm.state, ckpt);
    return lm;
}

EvalReport run_eval(const RunConfig& cfg) {
    if (cfg.checkpoint_path.empty()) {
        throw ConfigError("eval: a checkpoint path is required");
    }
    LoadedModel lm = load_model_checkpoint(cfg.checkpoint_path);
    const Dataset ds = build_dataset(cfg);
    const Split split = cfg.eval_split == "val" ? Split::Val : Split::Test;
    const EvalReport report =
        evaluate(lm.state, ds, cfg.episode, cfg.eval_episodes, cfg.seed, cfg.workers, split);

    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        std::ostringstream os;
        os << "episode,accuracy\n";
        for (std::size_t i = 0; i < report.per_episode.size(); ++i) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", report.per_episode[i]);
            os << i << ',' << buf << '\n';
        }
        write_file(cfg.out_dir + "/episode_accuracies.csv", os.str());
    }
    return report;
}

AblateResult run_ablate(const RunConfig& base, const std::string& sweep,
                        const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw ConfigError("ablate: seed list is empty");

    std::vector<std::string> arms;
    if (sweep == "strategy") {
        arms = {"naive", "two-stage", "at", "oat"};
    } else if (sweep == "h") {
        arms = {"0", "2", "4", "16", "32", "64"};
    } else {
        throw ConfigError("ablate: sweep must be 'strategy' or 'h', got '" + sweep + "'");
    }

    // Arms share one dataset and one epoch budget; the per-seed streams only
    // differ where the arm differs (e.g. the AT schedule draws).
    const std::uint64_t shared_data_seed = base.data_seed.value_or(base.seed);
    ScheduleSpec oat_spec = base.schedule;
    oat_spec.kind = ScheduleKind::Oat;
    const std::size_t budget = oat_spec.length();
    std::size_t oat_meta = 0;
    for (std::size_t g : oat_spec.gamma) oat_meta += g;

    AblateResult result;
    for (const auto& arm : arms) {
        std::vector<double> arm_accuracies;
        for (const std::uint64_t seed : seeds) {
            RunConfig cfg = base;
            cfg.out_dir.clear();
            cfg.resume_path.clear();
            cfg.data_seed = shared_data_seed;
            cfg.seed = seed;
            if (sweep == "strategy") {
                cfg.schedule = oat_spec;
                if (arm == "naive") {
                    cfg.schedule.kind = ScheduleKind::Naive;
                    cfg.schedule.total_epochs = budget;
                } else if (arm == "two-stage") {
                    cfg.schedule.kind = ScheduleKind::TwoStage;
                    cfg.schedule.aux_epochs = budget - oat_meta;
                    cfg.schedule.meta_epochs = oat_meta;
                } else if (arm == "at") {
                    cfg.schedule.kind = ScheduleKind::At;
                    cfg.schedule.total_epochs = budget;
                }
            } else {
                cfg.episode.n_pairs = std::stoul(arm);
            }

            TrainResult tr = run_training(cfg);
            const Dataset ds = build_dataset(cfg);
            const EvalReport rep = evaluate(tr.state, ds, cfg.episode, base.eval_episodes,
                                            cfg.seed, base.workers, Split::Test);
            result.rows.push_back({arm, seed, rep.mean_accuracy, rep.ci95.value_or(0.0)});
            arm_accuracies.push_back(rep.mean_accuracy);
        }

        double mean = 0.0;
        for (double a : arm_accuracies) mean += a;
        mean /= static_cast<double>(arm_accuracies.size());
        double std_dev = 0.0;
        if (arm_accuracies.size() > 1) {
            double sq = 0.0;
            for (double a : arm_accuracies) sq += (a - mean) * (a - mean);
            std_dev = std::sqrt(sq / static_cast<double>(arm_accuracies.size() - 1));
        }
        result.summary.push_back({arm, mean, std_dev});
    }
    return result;
}

std::string export_embeddings_csv(const RunConfig& cfg) {
    if (cfg.checkpoint_path.empty()) {
        throw ConfigError("export-embeddings: a checkpoint path is required");
    }
    LoadedModel lm = load_model_checkpoint(cfg.checkpoint_path);
    const Dataset ds = build_dataset(cfg);
    const Split split = cfg.phase == "train" ? Split::Train : Split::Test;

    SeededRng rng = SeededRng::stream(cfg.seed, "export-episode");
    const Episode ep = sample_episode_from_split(ds, cfg.episode, split, rng);

    Tape tape;
    SeededRng unused(0);
    const auto to_tensor = [&](const std::vector<std::vector<double>>& rows) {
        std::vector<double> flat;
        flat.reserve(rows.size() * ds.dim);
        for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
        return Tensor::matrix(std::move(flat), rows.size(), ds.dim);
    };

    std::ostringstream os;
    os << "role,class";
    for (std::size_t j = 0; j < lm.config.model.feature_dim; ++j) os << ",f" << j;
    os << "\n";
    char buf[40];
    const auto emit_row = [&](const char* role, const std::string& cls, const double* f,
                              std::size_t dim) {
        os << role << ',' << cls;
        for (std::size_t j = 0; j < dim; ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g", f[j]);
            os << ',' << buf;
        }
        os << '\n';
    };

    const std::size_t c_dim = lm.config.model.feature_dim;

    // real: every item of each episode class in the chosen split
    for (const int cid : ep.episode_classes) {
        const auto& members = ds.class_items[static_cast<std::size_t>(cid)];
        std::vector<std::vector<double>> rows;
        for (const std::size_t idx : members) rows.push_back(ds.items[idx].x);
        Tensor z = extract(tape, lm.state.extractor, to_tensor(rows), false);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            emit_row("real", ds.class_names[static_cast<std::size_t>(cid)],
                     z.values().data() + i * c_dim, c_dim);
        }
    }

    Tensor z_support = extract(tape, lm.state.extractor, to_tensor(ep.support_x), false);
    for (std::size_t i = 0; i < z_support.rows(); ++i) {
        const int cid = ep.episode_classes[static_cast<std::size_t>(ep.support_label[i])];
        emit_row("support", ds.class_names[static_cast<std::size_t>(cid)],
                 z_support.values().data() + i * c_dim, c_dim);
    }

    Tensor z_ref1 = Tensor::zeros(Shape{0, c_dim});
    Tensor z_ref2 = z_ref1;
    if (!ep.references.empty()) {
        std::vector<std::vector<double>> r1, r2;
        for (const auto& [a, b] : ep.references) {
            r1.push_back(a);
            r2.push_back(b);
        }
        z_ref1 = extract(tape, lm.state.extractor, to_tensor(r1), false);
        z_ref2 = extract(tape, lm.state.extractor, to_tensor(r2), false);
    }
    Tensor z_gen =
        generate_batch(tape, lm.state.generator, z_support, z_ref1, z_ref2, false, unused);
    const std::size_t h = ep.references.size();
    for (std::size_t i = 0; i < z_gen.rows(); ++i) {
        const std::size_t support_row = i / h;
        const int cid = ep.episode_classes[static_cast<std::size_t>(ep.support_label[support_row])];
        emit_row("generated", ds.class_names[static_cast<std::size_t>(cid)],
                 z_gen.values().data() + i * c_dim, c_dim);
    }

    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        write_file(cfg.out_dir + "/features.csv", os.str());
    }
    return os.str();
}

}  // namespace dtn
