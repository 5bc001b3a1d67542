#include "shgn/config.hpp"

#include <cstdio>
#include <fstream>

#include "shgn/error.hpp"
#include "shgn/rng.hpp"

namespace shgn {

namespace {

const char* initializer_name(InitializerKind k) { return k == InitializerKind::Hash ? "hash" : "table"; }

InitializerKind parse_initializer(const std::string& s) {
    if (s == "hash") return InitializerKind::Hash;
    if (s == "table") return InitializerKind::Table;
    throw Error("unknown initializer '" + s + "' (expected hash or table)");
}

const char* clue_mode_name(ClueMode m) { return m == ClueMode::TopTwoRanks ? "top2_ranks" : "exactly_two"; }

ClueMode parse_clue_mode(const std::string& s) {
    if (s == "top2_ranks") return ClueMode::TopTwoRanks;
    if (s == "exactly_two") return ClueMode::ExactlyTwo;
    throw Error("unknown clue mode '" + s + "'");
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

}  // namespace

void ModelConfig::validate() const {
    if (dim == 0 || heads == 0 || dim % heads != 0) throw Error("config: dim must be a positive multiple of heads");
    if (dec_layers == 0) throw Error("config: dec_layers must be positive");
    if (max_ending_len == 0) throw Error("config: max_ending_len must be positive");
    if (vocab_min_freq == 0) throw Error("config: vocab_min_freq must be positive");
}

void TrainConfig::validate() const {
    model.validate();
    weights.validate();
    if (batch_size == 0 || epochs == 0 || beam_size == 0) throw Error("config: batch_size, epochs, beam_size must be positive");
    if (!(base_lr > 0.0)) throw Error("config: base_lr must be positive");
    if (grad_clip < 0.0) throw Error("config: grad_clip must be non-negative");
}

TrainConfig paper_preset() { return TrainConfig{}; }

TrainConfig toy_preset() {
    TrainConfig c;
    c.preset = "toy";
    c.model.dim = 64;
    c.model.heads = 4;
    c.model.graph_layers = 1;
    c.model.dec_layers = 2;
    c.model.initializer = InitializerKind::Hash;
    c.batch_size = 8;
    c.base_lr = 2e-3;
    c.epochs = 300;
    c.warmup_steps = 40;
    return c;
}

TrainConfig preset_by_name(const std::string& name) {
    if (name == "paper") return paper_preset();
    if (name == "toy") return toy_preset();
    throw Error("unknown preset '" + name + "' (expected paper or toy)");
}

nlohmann::ordered_json to_json(const ModelConfig& c) {
    nlohmann::ordered_json j;
    j["dim"] = c.dim;
    j["heads"] = c.heads;
    j["graph_layers"] = c.graph_layers;
    j["dec_layers"] = c.dec_layers;
    j["ffn_dim"] = c.ffn_dim;
    j["max_ending_len"] = c.max_ending_len;
    j["scaled_attention"] = c.scaled_attention;
    j["initializer"] = initializer_name(c.initializer);
    j["init_seed"] = c.init_seed;
    j["use_global"] = c.graph.include_global;
    j["use_knowledge"] = c.graph.include_knowledge;
    j["use_words"] = c.graph.include_words;
    j["clue_mode"] = clue_mode_name(c.clue_mode);
    j["vocab_min_freq"] = c.vocab_min_freq;
    return j;
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["preset"] = c.preset;
    j["model"] = to_json(c.model);
    j["batch_size"] = c.batch_size;
    j["base_lr"] = c.base_lr;
    j["epochs"] = c.epochs;
    j["warmup_steps"] = c.warmup_steps;
    j["lambda1"] = c.weights.sentiment;
    j["lambda2"] = c.weights.clue;
    j["seed"] = c.seed;
    j["beam_size"] = c.beam_size;
    j["length_norm"] = c.length_norm;
    j["grad_clip"] = c.grad_clip;
    j["adam_beta1"] = c.adam_beta1;
    j["adam_beta2"] = c.adam_beta2;
    j["adam_eps"] = c.adam_eps;
    j["deterministic"] = c.deterministic;
    j["single_task"] = c.single_task;
    j["train"] = c.train_path;
    j["valid"] = c.valid_path;
    j["knowledge"] = c.knowledge_path;
    j["parses"] = c.parses_path;
    j["lexicon"] = c.lexicon_path;
    j["stopwords"] = c.stopwords_path;
    j["embeddings"] = c.embeddings_path;
    j["labels"] = c.labels_path;
    j["out_dir"] = c.out_dir;
    return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig c) {
    read(j, "dim", c.dim);
    read(j, "heads", c.heads);
    read(j, "graph_layers", c.graph_layers);
    read(j, "dec_layers", c.dec_layers);
    read(j, "ffn_dim", c.ffn_dim);
    read(j, "max_ending_len", c.max_ending_len);
    read(j, "scaled_attention", c.scaled_attention);
    if (j.contains("initializer")) c.initializer = parse_initializer(j["initializer"].get<std::string>());
    read(j, "init_seed", c.init_seed);
    read(j, "use_global", c.graph.include_global);
    read(j, "use_knowledge", c.graph.include_knowledge);
    read(j, "use_words", c.graph.include_words);
    if (j.contains("clue_mode")) c.clue_mode = parse_clue_mode(j["clue_mode"].get<std::string>());
    read(j, "vocab_min_freq", c.vocab_min_freq);
    return c;
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
    if (j.contains("preset")) {
        const TrainConfig preset = preset_by_name(j["preset"].get<std::string>());
        // Paths chosen before the preset survive; everything else restarts from the preset.
        TrainConfig merged = preset;
        merged.train_path = c.train_path;
        merged.valid_path = c.valid_path;
        merged.knowledge_path = c.knowledge_path;
        merged.parses_path = c.parses_path;
        merged.lexicon_path = c.lexicon_path;
        merged.stopwords_path = c.stopwords_path;
        merged.embeddings_path = c.embeddings_path;
        merged.labels_path = c.labels_path;
        merged.out_dir = c.out_dir;
        c = merged;
    }
    if (j.contains("model")) c.model = model_config_from_json(j["model"], c.model);
    read(j, "batch_size", c.batch_size);
    read(j, "base_lr", c.base_lr);
    read(j, "epochs", c.epochs);
    read(j, "warmup_steps", c.warmup_steps);
    read(j, "lambda1", c.weights.sentiment);
    read(j, "lambda2", c.weights.clue);
    read(j, "seed", c.seed);
    read(j, "beam_size", c.beam_size);
    read(j, "length_norm", c.length_norm);
    read(j, "grad_clip", c.grad_clip);
    read(j, "adam_beta1", c.adam_beta1);
    read(j, "adam_beta2", c.adam_beta2);
    read(j, "adam_eps", c.adam_eps);
    read(j, "deterministic", c.deterministic);
    read(j, "single_task", c.single_task);
    read(j, "train", c.train_path);
    read(j, "valid", c.valid_path);
    read(j, "knowledge", c.knowledge_path);
    read(j, "parses", c.parses_path);
    read(j, "lexicon", c.lexicon_path);
    read(j, "stopwords", c.stopwords_path);
    read(j, "embeddings", c.embeddings_path);
    read(j, "labels", c.labels_path);
    read(j, "out_dir", c.out_dir);
    return c;
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    try {
        return train_config_from_json(nlohmann::json::parse(in), std::move(base));
    } catch (const nlohmann::json::exception& e) {
        throw Error("config " + path.string() + ": " + e.what());
    }
}

std::string config_hash(const ModelConfig& c) {
    const std::string text = to_json(c).dump();
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
    return buf;
}

}  // namespace shgn
