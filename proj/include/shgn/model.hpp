#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shgn/auxtasks.hpp"
#include "shgn/beam_search.hpp"
#include "shgn/config.hpp"
#include "shgn/corpus.hpp"
#include "shgn/decoder.hpp"
#include "shgn/encoder.hpp"
#include "shgn/graph.hpp"
#include "shgn/vocab.hpp"

namespace shgn {

// One story prepared for the model: its graph plus every supervision target.
struct Example {
    std::string id;
    HeteroGraph graph;
    std::vector<std::size_t> decoder_input;  // BOS y1 .. ym
    std::vector<std::size_t> targets;        // y1 .. ym EOS
    Sentiment sentiment = Sentiment::Neutral;
    std::optional<std::vector<double>> clue_targets;  // one per word node
};

// External resources used to turn stories into examples.
struct Resources {
    std::vector<KnowledgeEdge> knowledge;
    Stopwords stopwords = Stopwords::english_default();
    std::optional<DepTrees> trees;
    SentimentLexicon lexicon;
    std::map<std::string, StoryLabels> label_cache;
};

class ExampleBuilder {
public:
    ExampleBuilder(Resources resources, const ModelConfig& config, const Vocab& vocab);

    HeteroGraph graph_for(const Story& story) const;
    std::vector<ConceptHit> concepts_for(const Story& story) const;
    // Stories without an ending produce an example with empty decoder targets.
    Example build(const Story& story) const;
    // Sentiment and clue flags from the label cache, the story itself, or the lexicon/parses.
    Story labeled(const Story& story) const;

    const Resources& resources() const { return resources_; }

private:
    Resources resources_;
    KnowledgeIndex index_;
    ModelConfig config_;
    const Vocab* vocab_;
};

struct LossBreakdown {
    Tensor total;
    Tensor generation;      // per-token mean (optimized)
    Tensor generation_sum;  // summed negative log-likelihood
    Tensor sentiment;
    Tensor clue;
    std::size_t tokens = 0;
};

class ShgnModel {
public:
    ShgnModel(const ModelConfig& config, Vocab vocab, std::shared_ptr<const EmbeddingTable> table, std::uint64_t seed);

    ShgnModel(const ShgnModel&) = delete;
    ShgnModel& operator=(const ShgnModel&) = delete;

    const ModelConfig& config() const { return config_; }
    const Vocab& vocab() const { return vocab_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const HgtEncoder& encoder() const { return *encoder_; }
    const TransformerDecoder& decoder() const { return *decoder_; }
    const SentimentHead& sentiment_head() const { return *sentiment_; }
    const ClueHead& clue_head() const { return *clue_; }

    // Final node representations [N x d].
    Tensor encode(const HeteroGraph& graph) const;

    // Full multi-task objective. With single_task the auxiliary heads are never evaluated
    // and total == generation. A non-finite component makes total NaN.
    LossBreakdown losses(const Example& example, const LossWeights& weights, bool single_task = false) const;

    GenerationResult generate(const HeteroGraph& graph, const BeamOptions& options) const;
    GenerationResult generate_greedy(const HeteroGraph& graph, const BeamOptions& options) const;
    BeamOptions beam_options(std::size_t beam_size, bool length_norm) const;

private:
    ModelConfig config_;
    Vocab vocab_;
    ParamStore params_;
    std::unique_ptr<HgtEncoder> encoder_;
    std::unique_ptr<TransformerDecoder> decoder_;
    std::unique_ptr<SentimentHead> sentiment_;
    std::unique_ptr<ClueHead> clue_;
};

}  // namespace shgn
