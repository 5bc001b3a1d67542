#pragma once

#include <memory>
#include <vector>

#include "shgn/config.hpp"
#include "shgn/model.hpp"

namespace shgn {

// Loads every resource file named in the config; unset paths are skipped.
Resources load_resources(const TrainConfig& config);

// The embedding table when the config selects the table initializer, otherwise null.
std::shared_ptr<const EmbeddingTable> load_table(const TrainConfig& config);

std::vector<Example> build_examples(const ExampleBuilder& builder, const std::vector<Story>& stories);

}  // namespace shgn
