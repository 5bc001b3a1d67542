#pragma once

#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shgn/checkpoint.hpp"
#include "shgn/config.hpp"
#include "shgn/error.hpp"
#include "shgn/model.hpp"

namespace shgn {

// Linear warm-up to base_lr over `warmup` steps, constant afterwards.
double lr_schedule(std::size_t step, double base_lr, std::size_t warmup);

class Adam {
public:
    Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(ParamStore& params, double lr);

    AdamState& state() { return state_; }
    const AdamState& state() const { return state_; }

private:
    double beta1_, beta2_, eps_;
    AdamState state_;
};

// Rescales gradients so their global L2 norm is at most max_norm; returns the norm before clipping.
double clip_grad_norm(ParamStore& params, double max_norm);
double grad_norm(const ParamStore& params);

// Examples sorted by node count, chunked, then the chunk order shuffled.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<Example>& examples, std::size_t batch_size,
                                                   Rng& rng);

struct StepRecord {
    std::size_t step = 0;
    std::size_t epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    double generation = 0.0;
    double sentiment = 0.0;
    double clue = 0.0;
    double grad_norm = 0.0;

    nlohmann::ordered_json to_json() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    std::size_t step = 0;
    double train_loss = 0.0;
    double train_generation = 0.0;  // token-weighted mean NLL
    double valid_generation = 0.0;  // NaN without a validation split
    bool improved = false;

    nlohmann::ordered_json to_json() const;
};

struct TrainResult {
    std::size_t steps = 0;
    std::size_t epochs = 0;
    double best_valid_generation = 0.0;
    std::vector<EpochRecord> history;
};

class TrainingDiverged : public Error {
public:
    using Error::Error;
};

struct TrainerHooks {
    // Return true to stop after this epoch.
    std::function<bool(const EpochRecord&)> on_epoch;
    std::function<void(const StepRecord&)> on_step;
};

// Token-weighted mean generation NLL over a split.
double mean_generation_nll(const ShgnModel& model, const std::vector<Example>& examples);

class Trainer {
public:
    Trainer(const TrainConfig& config, ShgnModel& model, bool single_task = false);

    // Writes train_log.jsonl, last.ckpt and best.ckpt under config.out_dir when it is set.
    TrainResult run(const std::vector<Example>& train, const std::vector<Example>& valid, const TrainerHooks& hooks = {});

    // One optimizer update over the given examples; returns the record that is logged.
    StepRecord step(const std::vector<const Example*>& batch, std::size_t epoch);

    Adam& optimizer() { return adam_; }
    std::size_t steps() const { return step_; }

private:
    void write_diagnostics(const Example& example, const LossBreakdown& losses) const;

    TrainConfig config_;
    ShgnModel& model_;
    bool single_task_;
    Adam adam_;
    std::size_t step_ = 0;
};

}  // namespace shgn
