#include "shgn/pipeline.hpp"

#include "shgn/auxtasks.hpp"
#include "shgn/error.hpp"

namespace shgn {

Resources load_resources(const TrainConfig& config) {
    Resources r;
    if (!config.knowledge_path.empty()) r.knowledge = load_knowledge(config.knowledge_path);
    if (!config.stopwords_path.empty()) r.stopwords = load_stopwords(config.stopwords_path);
    if (!config.parses_path.empty()) r.trees = load_dep_trees(config.parses_path);
    if (!config.lexicon_path.empty()) r.lexicon = load_lexicon(config.lexicon_path);
    if (!config.labels_path.empty()) r.label_cache = load_label_cache(config.labels_path);
    return r;
}

std::shared_ptr<const EmbeddingTable> load_table(const TrainConfig& config) {
    if (config.model.initializer != InitializerKind::Table) return nullptr;
    if (config.embeddings_path.empty()) throw Error("the table initializer needs --embeddings");
    return std::make_shared<const EmbeddingTable>(load_embeddings(config.embeddings_path));
}

std::vector<Example> build_examples(const ExampleBuilder& builder, const std::vector<Story>& stories) {
    std::vector<Example> out;
    out.reserve(stories.size());
    for (const Story& s : stories) out.push_back(builder.build(s));
    return out;
}

}  // namespace shgn
