#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "shgn/auxtasks.hpp"
#include "shgn/graph.hpp"

namespace shgn {

enum class InitializerKind { Hash, Table };

// Everything that determines parameter shapes and the forward computation.
struct ModelConfig {
    std::size_t dim = 768;
    std::size_t heads = 12;
    std::size_t graph_layers = 1;
    std::size_t dec_layers = 12;
    std::size_t ffn_dim = 0;  // 0 selects 4 * dim
    std::size_t max_ending_len = 20;
    bool scaled_attention = false;
    InitializerKind initializer = InitializerKind::Table;
    std::uint64_t init_seed = 7;  // hash provider seed
    GraphOptions graph;
    ClueMode clue_mode = ClueMode::TopTwoRanks;
    std::size_t vocab_min_freq = 2;

    void validate() const;
};

struct TrainConfig {
    ModelConfig model;
    std::size_t batch_size = 64;
    double base_lr = 5e-5;
    std::size_t epochs = 15;
    std::size_t warmup_steps = 1000;
    LossWeights weights;
    std::uint64_t seed = 1;
    std::size_t beam_size = 5;
    bool length_norm = false;
    double grad_clip = 1.0;  // global-norm clip; 0 disables
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    bool deterministic = true;
    bool single_task = false;  // generation loss only; auxiliary heads unused
    std::string preset = "paper";

    std::string train_path, valid_path, knowledge_path, parses_path, lexicon_path, stopwords_path, embeddings_path,
        labels_path, out_dir;

    void validate() const;
};

// Paper-scale defaults.
TrainConfig paper_preset();
// Desk-scale configuration used by the acceptance runs: d=64, 4 heads, 1 graph layer,
// 2 decoder layers, hash initializer.
TrainConfig toy_preset();
TrainConfig preset_by_name(const std::string& name);

nlohmann::ordered_json to_json(const ModelConfig& c);
nlohmann::ordered_json to_json(const TrainConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});
// Fields absent from `j` keep their value from `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});

// Stable hash of the model configuration (hex string); checkpoints record it.
std::string config_hash(const ModelConfig& c);

}  // namespace shgn
