#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shgn/config.hpp"
#include "shgn/model.hpp"

namespace shgn {

struct AdamState {
    std::size_t t = 0;
    std::map<std::string, std::vector<double>> m;
    std::map<std::string, std::vector<double>> v;
};

struct Checkpoint {
    ModelConfig model;
    std::optional<nlohmann::json> train_config;
    std::string config_hash;
    std::size_t step = 0;
    std::vector<std::string> vocab;
    std::map<std::string, std::pair<Shape, std::vector<double>>> params;
    std::optional<AdamState> optimizer;
};

inline constexpr const char* kCheckpointFormat = "shgn-checkpoint-v1";

void save_checkpoint(const std::filesystem::path& path, const ShgnModel& model, std::size_t step,
                     const AdamState* optimizer = nullptr, const TrainConfig* train = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies stored values into the model in place. Throws on a config hash mismatch,
// a missing or extra parameter, or a shape difference.
void restore_params(ShgnModel& model, const Checkpoint& checkpoint);

// Rebuilds a model from a checkpoint. The table is required for the table initializer.
std::unique_ptr<ShgnModel> model_from_checkpoint(const Checkpoint& checkpoint,
                                                 std::shared_ptr<const EmbeddingTable> table = nullptr);

}  // namespace shgn
