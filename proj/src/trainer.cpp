#include "dtn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace dtn {

namespace {

Tensor rows_to_tensor(const std::vector<std::vector<double>>& rows, std::size_t dim) {
    std::vector<double> flat;
    flat.reserve(rows.size() * dim);
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return Tensor::matrix(std::move(flat), rows.size(), dim);
}

void zero_all_grads(ModelState& state) {
    for (auto& [name, tensor] : state.named_parameters()) {
        (void)name;
        tensor.zero_grad();
    }
}

void check_params_finite(const ModelState& state, std::size_t step, double lr) {
    if (!state.all_finite()) {
        throw TrainingError("optimizer produced non-finite parameters at step " +
                            std::to_string(step) + " (lr " + std::to_string(lr) + ")");
    }
}

}  // namespace

Optimizer::Optimizer(const ModelState& state, double momentum) : momentum_(momentum) {
    params_ = state.named_parameters();
    for (const auto& [name, tensor] : params_) {
        velocities_.emplace_back(name, std::vector<double>(tensor.size(), 0.0));
    }
}

void Optimizer::step(const std::vector<std::string>& param_names, double lr) {
    for (const auto& wanted : param_names) {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (params_[i].first != wanted) continue;
            Tensor& p = params_[i].second;
            std::vector<double>& v = velocities_[i].second;
            const std::vector<double>& g = p.grad();
            for (std::size_t j = 0; j < v.size(); ++j) {
                v[j] = momentum_ * v[j] + g[j];
                p.values_mut()[j] -= lr * v[j];
            }
            break;
        }
    }
}

void Optimizer::set_velocity(const std::string& name, const std::vector<double>& values) {
    for (auto& [pname, v] : velocities_) {
        if (pname == name) {
            if (v.size() != values.size()) {
                throw CheckpointError("velocity '" + name + "' has " +
                                      std::to_string(values.size()) + " entries, expected " +
                                      std::to_string(v.size()));
            }
            v = values;
            return;
        }
    }
    throw CheckpointError("velocity '" + name + "' does not match any parameter");
}

std::vector<std::string> auxiliary_param_names(const ModelState& state) {
    std::vector<std::string> out;
    for (const auto& [name, tensor] : state.named_parameters()) {
        (void)tensor;
        if (name.rfind("extractor.", 0) == 0 || name.rfind("aux.", 0) == 0) out.push_back(name);
    }
    return out;
}

std::vector<std::string> meta_param_names(const ModelState& state) {
    std::vector<std::string> out;
    for (const auto& [name, tensor] : state.named_parameters()) {
        (void)tensor;
        if (name.rfind("extractor.", 0) == 0 || name.rfind("generator.", 0) == 0 ||
            name == "meta.alpha") {
            out.push_back(name);
        }
    }
    return out;
}

TrainerRngs TrainerRngs::from_root(std::uint64_t root_seed) {
    return TrainerRngs{SeededRng::stream(root_seed, "episodes"),
                       SeededRng::stream(root_seed, "dropout"), root_seed};
}

double lr_scale_at(std::size_t epoch_index, std::size_t total_epochs) {
    if (total_epochs == 0) return 1.0;
    if (epoch_index >= 2 * total_epochs / 3) return 0.25;
    if (epoch_index >= total_epochs / 2) return 0.5;
    return 1.0;
}

std::optional<double> run_auxiliary_epoch(ModelState& state, const Dataset& ds,
                                          const TrainOptions& opts, double lr, Optimizer& opt,
                                          TrainerRngs& rngs) {
    if (opts.aux_steps_per_epoch == 0) return std::nullopt;
    const auto param_group = auxiliary_param_names(state);

    double total_loss = 0.0;
    for (std::size_t step = 0; step < opts.aux_steps_per_epoch; ++step) {
        const auto [xs, labels] = sample_aux_batch(ds, opts.batch_size, rngs.episodes);
        Tape tape;
        Tensor x = rows_to_tensor(xs, ds.dim);
        Tensor z = extract(tape, state.extractor, x, /*training=*/true);
        Tensor loss = auxiliary_loss(tape, z, state.aux_head, labels);
        const double loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
            throw TrainingError("auxiliary epoch: NaN loss at step " + std::to_string(step) +
                                " (lr " + std::to_string(lr) + ")");
        }
        total_loss += loss_value;

        zero_all_grads(state);
        tape.backward(loss);
        opt.step(param_group, lr);
        ++state.step_count;
        check_params_finite(state, state.step_count, lr);
    }
    return total_loss / static_cast<double>(opts.aux_steps_per_epoch);
}

std::optional<double> run_meta_epoch(ModelState& state, const Dataset& ds,
                                     const EpisodeConfig& cfg, const TrainOptions& opts, double lr,
                                     Optimizer& opt, TrainerRngs& rngs) {
    if (opts.episodes_per_epoch == 0) return std::nullopt;
    const auto param_group = meta_param_names(state);

    double total_loss = 0.0;
    std::size_t trained = 0;
    std::size_t skipped = 0;
    const std::size_t max_skips = static_cast<std::size_t>(
        opts.max_skip_fraction * static_cast<double>(opts.episodes_per_epoch));

    for (std::size_t e = 0; e < opts.episodes_per_epoch; ++e) {
        const Episode ep = sample_episode(ds, cfg, Phase::MetaTrain, rngs.episodes);

        Tape tape;
        Tensor z_support =
            extract(tape, state.extractor, rows_to_tensor(ep.support_x, ds.dim), true);
        Tensor z_query = extract(tape, state.extractor, rows_to_tensor(ep.query_x, ds.dim), true);

        Tensor z_ref1 = Tensor::zeros(Shape{0, state.config.feature_dim});
        Tensor z_ref2 = z_ref1;
        if (!ep.references.empty()) {
            std::vector<std::vector<double>> r1, r2;
            for (const auto& [a, b] : ep.references) {
                r1.push_back(a);
                r2.push_back(b);
            }
            z_ref1 = extract(tape, state.extractor, rows_to_tensor(r1, ds.dim), true);
            z_ref2 = extract(tape, state.extractor, rows_to_tensor(r2, ds.dim), true);
        }
        Tensor z_gen = generate_batch(tape, state.generator, z_support, z_ref1, z_ref2,
                                      /*training=*/true, rngs.dropout);

        ProxyMatrix proxies;
        try {
            proxies = build_proxies(tape, z_support, z_gen,
                                    {cfg.n_way, cfg.k_shot, ep.references.size()});
        } catch (const DegenerateProxyError&) {
            ++skipped;
            if (skipped > max_skips) {
                throw TrainingError("meta epoch: " + std::to_string(skipped) +
                                    " degenerate-proxy episodes exceed the tolerated " +
                                    std::to_string(max_skips));
            }
            continue;
        }

        Tensor scores = score_query(tape, z_query, proxies);
        Tensor loss = meta_loss(tape, scores, state.meta_alpha, ep.query_label);
        const double loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
            throw TrainingError("meta epoch: NaN loss at episode " + std::to_string(e) + " (lr " +
                                std::to_string(lr) + ")");
        }
        total_loss += loss_value;
        ++trained;

        zero_all_grads(state);
        tape.backward(loss);
        opt.step(param_group, lr);
        ++state.step_count;
        check_params_finite(state, state.step_count, lr);
    }
    if (trained == 0) return std::nullopt;
    return total_loss / static_cast<double>(trained);
}

std::vector<EpochMetrics> run_schedule(ModelState& state, const std::vector<EpochKind>& schedule,
                                       const Dataset& ds, const EpisodeConfig& cfg,
                                       const TrainOptions& opts, Optimizer& opt, TrainerRngs& rngs,
                                       std::size_t start_epoch, std::size_t end_epoch) {
    const std::size_t total = schedule.size();
    const std::size_t stop = std::min(end_epoch, total);

    std::vector<EpochMetrics> metrics;
    const bool has_val = !ds.classes_in(Split::Val).empty();

    for (std::size_t epoch = start_epoch; epoch < stop; ++epoch) {
        const double scale = lr_scale_at(epoch, total);
        EpochMetrics row;
        row.epoch_index = epoch;
        row.kind = schedule[epoch];
        if (schedule[epoch] == EpochKind::Auxiliary) {
            row.mean_loss = run_auxiliary_epoch(state, ds, opts, opts.lr_aux * scale, opt, rngs);
        } else {
            row.mean_loss = run_meta_epoch(state, ds, cfg, opts, opts.lr_meta * scale, opt, rngs);
        }
        if (opts.eval_every > 0 && has_val && (epoch + 1) % opts.eval_every == 0) {
            const EvalReport report = evaluate(state, ds, cfg, opts.eval_episodes,
                                               rngs.eval_seed, /*workers=*/1, Split::Val);
            row.val_accuracy = report.mean_accuracy;
            row.val_ci95 = report.ci95;
        }
        metrics.push_back(std::move(row));
    }
    return metrics;
}

double evaluate_episode(const ModelState& state, const Episode& ep, const EpisodeConfig& cfg) {
    Tape tape;
    SeededRng unused(0);  // dropout is off in eval mode; never drawn from

    const std::size_t dim = ep.support_x.front().size();
    Tensor z_support = extract(tape, state.extractor, rows_to_tensor(ep.support_x, dim), false);
    Tensor z_query = extract(tape, state.extractor, rows_to_tensor(ep.query_x, dim), false);

    Tensor z_ref1 = Tensor::zeros(Shape{0, state.config.feature_dim});
    Tensor z_ref2 = z_ref1;
    if (!ep.references.empty()) {
        std::vector<std::vector<double>> r1, r2;
        for (const auto& [a, b] : ep.references) {
            r1.push_back(a);
            r2.push_back(b);
        }
        z_ref1 = extract(tape, state.extractor, rows_to_tensor(r1, dim), false);
        z_ref2 = extract(tape, state.extractor, rows_to_tensor(r2, dim), false);
    }
    Tensor z_gen = generate_batch(tape, state.generator, z_support, z_ref1, z_ref2,
                                  /*training=*/false, unused);
    ProxyMatrix proxies =
        build_proxies(tape, z_support, z_gen, {cfg.n_way, cfg.k_shot, ep.references.size()});
    Tensor scores = score_query(tape, z_query, proxies);

    std::size_t correct = 0;
    const std::size_t n_query = scores.rows();
    for (std::size_t q = 0; q < n_query; ++q) {
        const double* row = scores.values().data() + q * cfg.n_way;
        std::size_t best = 0;
        for (std::size_t n = 1; n < cfg.n_way; ++n) {
            if (row[n] > row[best]) best = n;
        }
        if (static_cast<int>(best) == ep.query_label[q]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n_query);
}

EvalReport make_eval_report(std::vector<double> per_episode) {
    EvalReport report;
    report.episode_count = per_episode.size();
    report.per_episode = std::move(per_episode);
    if (report.episode_count == 0) return report;

    double mean = 0.0;
    for (double a : report.per_episode) mean += a;
    mean /= static_cast<double>(report.episode_count);
    report.mean_accuracy = mean;

    if (report.episode_count > 1) {
        double sq = 0.0;
        for (double a : report.per_episode) sq += (a - mean) * (a - mean);
        const double sample_std = std::sqrt(sq / static_cast<double>(report.episode_count - 1));
        report.ci95 = 1.96 * sample_std / std::sqrt(static_cast<double>(report.episode_count));
    }
    return report;
}

EvalReport evaluate(const ModelState& state, const Dataset& ds, const EpisodeConfig& cfg,
                    std::size_t episode_count, std::uint64_t seed, std::size_t workers,
                    Split split) {
    EvalReport report;
    report.episode_count = episode_count;
    report.per_episode.assign(episode_count, 0.0);
    if (episode_count == 0) return report;

    const auto run_range = [&](std::size_t worker_index, std::exception_ptr& error) {
        try {
            for (std::size_t i = worker_index; i < episode_count; i += std::max<std::size_t>(workers, 1)) {
                SeededRng rng = SeededRng::stream(seed, "eval-episode", i);
                const Episode ep = sample_episode_from_split(ds, cfg, split, rng);
                report.per_episode[i] = evaluate_episode(state, ep, cfg);
            }
        } catch (...) {
            error = std::current_exception();
        }
    };

    if (workers <= 1) {
        std::exception_ptr error;
        run_range(0, error);
        if (error) std::rethrow_exception(error);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(run_range, w, std::ref(errors[w]));
        }
        for (auto& t : pool) t.join();
        for (const auto& error : errors) {
            if (error) std::rethrow_exception(error);
        }
    }
    return make_eval_report(std::move(report.per_episode));
}

Checkpoint make_training_checkpoint(const ModelState& state, const Optimizer& opt,
                                    const TrainerRngs& rngs, const std::string& schedule_string,
                                    std::size_t next_epoch, const std::string& run_config_text) {
    Checkpoint ckpt = checkpoint_from_model(state);
    ckpt.schedule_string = schedule_string;
    ckpt.next_epoch = next_epoch;
    ckpt.config_text = run_config_text;  // complete snapshot, model.* keys included
    ckpt.rng_states.emplace_back("episodes", rngs.episodes.state());
    ckpt.rng_states.emplace_back("dropout", rngs.dropout.state());
    for (const auto& [name, v] : opt.velocities()) {
        Shape shape{v.size()};
        ckpt.velocities.emplace_back(name, Checkpoint::Array{std::move(shape), v});
    }
    return ckpt;
}

void restore_training(ModelState& state, Optimizer& opt, TrainerRngs& rngs,
                      const Checkpoint& ckpt) {
    restore_model(state, ckpt);
    for (const auto& [name, arr] : ckpt.velocities) {
        opt.set_velocity(name, arr.values);
    }
    for (const auto& [name, text] : ckpt.rng_states) {
        if (name == "episodes") {
            rngs.episodes.restore(text);
        } else if (name == "dropout") {
            rngs.dropout.restore(text);
        }
    }
}

std::string metrics_to_csv(const std::vector<EpochMetrics>& metrics) {
    std::ostringstream os;
    os << "epoch_index,kind,mean_loss,val_accuracy,val_ci95\n";
    char buf[40];
    const auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& row : metrics) {
        os << row.epoch_index << ',' << (row.kind == EpochKind::Auxiliary ? 'A' : 'M') << ',';
        if (row.mean_loss) os << fmt(*row.mean_loss);
        os << ',';
        if (row.val_accuracy) os << fmt(*row.val_accuracy);
        os << ',';
        if (row.val_ci95) os << fmt(*row.val_ci95);
        os << '\n';
    }
    return os.str();
}

}  // namespace dtn
