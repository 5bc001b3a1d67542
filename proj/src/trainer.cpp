#include "shgn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "shgn/ops.hpp"

namespace shgn {

double lr_schedule(std::size_t step, double base_lr, std::size_t warmup) {
    if (warmup == 0) return base_lr;
    return base_lr * std::min(1.0, static_cast<double>(step) / static_cast<double>(warmup));
}

void Adam::step(ParamStore& params, double lr) {
    ++state_.t;
    const double t = static_cast<double>(state_.t);
    const double c1 = 1.0 - std::pow(beta1_, t);
    const double c2 = 1.0 - std::pow(beta2_, t);
    for (const auto& [name, param] : params.all()) {
        Tensor p = param;
        auto& m = state_.m[name];
        auto& v = state_.v[name];
        if (m.empty()) {
            m.assign(p.numel(), 0.0);
            v.assign(p.numel(), 0.0);
        }
        const auto g = p.grad();
        auto w = p.mutable_data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }
}

double grad_norm(const ParamStore& params) {
    double sq = 0.0;
    for (const auto& [name, p] : params.all())
        for (double g : p.grad()) sq += g * g;
    return std::sqrt(sq);
}

double clip_grad_norm(ParamStore& params, double max_norm) {
    const double norm = grad_norm(params);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (const auto& [name, p] : params.all()) {
            auto& g = p.node()->ensure_grad();
            for (double& x : g) x *= scale;
        }
    }
    return norm;
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<Example>& examples, std::size_t batch_size,
                                                   Rng& rng) {
    if (batch_size == 0) throw Error("batch size must be positive");
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return examples[a].graph.num_nodes() < examples[b].graph.num_nodes();
    });
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < order.size(); i += batch_size) {
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
    }
    for (std::size_t i = batches.size(); i > 1; --i) std::swap(batches[i - 1], batches[rng.below(i)]);
    return batches;
}

nlohmann::ordered_json StepRecord::to_json() const {
    nlohmann::ordered_json j;
    j["step"] = step;
    j["epoch"] = epoch;
    j["lr"] = lr;
    j["L"] = loss;
    j["L_gen"] = generation;
    j["L_sen"] = sentiment;
    j["L_clu"] = clue;
    j["grad_norm"] = grad_norm;
    return j;
}

nlohmann::ordered_json EpochRecord::to_json() const {
    nlohmann::ordered_json j;
    j["epoch"] = epoch;
    j["step"] = step;
    j["train_L"] = train_loss;
    j["train_L_gen"] = train_generation;
    if (std::isfinite(valid_generation)) j["valid_L_gen"] = valid_generation;
    j["improved"] = improved;
    return j;
}

double mean_generation_nll(const ShgnModel& model, const std::vector<Example>& examples) {
    NoGradGuard guard;
    double sum = 0.0;
    std::size_t tokens = 0;
    const LossWeights none{0.0, 0.0};
    for (const Example& ex : examples) {
        const LossBreakdown l = model.losses(ex, none, true);
        sum += l.generation_sum.item();
        tokens += l.tokens;
    }
    return tokens == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(tokens);
}

Trainer::Trainer(const TrainConfig& config, ShgnModel& model, bool single_task)
    : config_(config),
      model_(model),
      single_task_(single_task),
      adam_(config.adam_beta1, config.adam_beta2, config.adam_eps) {
    config_.validate();
}

void Trainer::write_diagnostics(const Example& example, const LossBreakdown& losses) const {
    if (config_.out_dir.empty()) return;
    nlohmann::ordered_json j;
    j["step"] = step_;
    j["example"] = example.id;
    j["L"] = losses.total.item();
    j["L_gen"] = losses.generation.item();
    j["L_sen"] = losses.sentiment.item();
    j["L_clu"] = losses.clue.item();
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [name, p] : model_.params().all()) {
        double max_abs = 0.0;
        bool finite = true;
        for (double v : p.data()) {
            finite = finite && std::isfinite(v);
            max_abs = std::max(max_abs, std::abs(v));
        }
        params[name] = {{"max_abs", max_abs}, {"finite", finite}};
    }
    j["params"] = std::move(params);
    std::filesystem::create_directories(config_.out_dir);
    std::ofstream(std::filesystem::path(config_.out_dir) / "diverged.json") << j.dump(2) << '\n';
}

StepRecord Trainer::step(const std::vector<const Example*>& batch, std::size_t epoch) {
    if (batch.empty()) throw Error("empty batch");
    ParamStore& params = model_.params();
    params.zero_grad();
    const double inv = 1.0 / static_cast<double>(batch.size());
    StepRecord rec;
    rec.epoch = epoch;
    for (const Example* ex : batch) {
        const LossBreakdown l = model_.losses(*ex, config_.weights, single_task_);
        if (!std::isfinite(l.total.item())) {
            write_diagnostics(*ex, l);
            throw TrainingDiverged("non-finite loss at step " + std::to_string(step_ + 1) + " on example '" + ex->id +
                                   "'");
        }
        ops::scalar_mul(l.total, inv).backward();
        rec.loss += l.total.item() * inv;
        rec.generation += l.generation.item() * inv;
        rec.sentiment += l.sentiment.item() * inv;
        rec.clue += l.clue.item() * inv;
    }
    rec.grad_norm = clip_grad_norm(params, config_.grad_clip);
    ++step_;
    rec.step = step_;
    rec.lr = lr_schedule(step_, config_.base_lr, config_.warmup_steps);
    adam_.step(params, rec.lr);
    return rec;
}

TrainResult Trainer::run(const std::vector<Example>& train, const std::vector<Example>& valid,
                         const TrainerHooks& hooks) {
    if (train.empty()) throw Error("no training examples");
    const bool write = !config_.out_dir.empty();
    std::ofstream log;
    std::filesystem::path dir(config_.out_dir);
    if (write) {
        std::filesystem::create_directories(dir);
        log.open(dir / "train_log.jsonl");
        if (!log) throw Error("cannot write " + (dir / "train_log.jsonl").string());
    }

    TrainResult result;
    result.best_valid_generation = std::numeric_limits<double>::infinity();
    for (std::size_t epoch = 1; epoch <= config_.epochs; ++epoch) {
        Rng rng(config_.seed + epoch);
        double loss_sum = 0.0;
        double gen_sum = 0.0;
        std::size_t seen = 0;
        for (const auto& idx : make_batches(train, config_.batch_size, rng)) {
            std::vector<const Example*> batch;
            for (std::size_t i : idx) batch.push_back(&train[i]);
            const StepRecord rec = step(batch, epoch);
            loss_sum += rec.loss * static_cast<double>(batch.size());
            gen_sum += rec.generation * static_cast<double>(batch.size());
            seen += batch.size();
            if (write) log << rec.to_json().dump() << '\n';
            if (hooks.on_step) hooks.on_step(rec);
        }

        EpochRecord er;
        er.epoch = epoch;
        er.step = step_;
        er.train_loss = loss_sum / static_cast<double>(seen);
        er.train_generation = gen_sum / static_cast<double>(seen);
        er.valid_generation = valid.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_generation_nll(model_, valid);
        const double criterion = valid.empty() ? er.train_generation : er.valid_generation;
        if (criterion < result.best_valid_generation) {
            result.best_valid_generation = criterion;
            er.improved = true;
            if (write) save_checkpoint(dir / "best.ckpt", model_, step_, &adam_.state(), &config_);
        }
        if (write) {
            nlohmann::ordered_json j = er.to_json();
            j["kind"] = "epoch";
            log << j.dump() << '\n';
            log.flush();
        }
        result.history.push_back(er);
        result.epochs = epoch;
        if (hooks.on_epoch && hooks.on_epoch(er)) break;
    }
    result.steps = step_;
    if (write) save_checkpoint(dir / "last.ckpt", model_, step_, &adam_.state(), &config_);
    return result;
}

}  // namespace shgn
