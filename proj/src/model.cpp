#include "shgn/model.hpp"

#include <cmath>
#include <limits>

#include "shgn/error.hpp"

namespace shgn {

ExampleBuilder::ExampleBuilder(Resources resources, const ModelConfig& config, const Vocab& vocab)
    : resources_(std::move(resources)), index_(resources_.knowledge), config_(config), vocab_(&vocab) {}

std::vector<ConceptHit> ExampleBuilder::concepts_for(const Story& story) const {
    return retrieve_concepts(story, index_, resources_.stopwords, resources_.trees ? &*resources_.trees : nullptr);
}

HeteroGraph ExampleBuilder::graph_for(const Story& story) const {
    return build_graph(story, concepts_for(story), resources_.stopwords, config_.graph);
}

Story ExampleBuilder::labeled(const Story& story) const {
    Story out = story;
    if (auto it = resources_.label_cache.find(story.id); it != resources_.label_cache.end()) {
        if (!out.sentiment) out.sentiment = it->second.sentiment;
        if (!out.clue_flags) out.clue_flags = it->second.clue_flags;
    }
    if (!out.sentiment && out.has_ending()) out.sentiment = label_sentiment(out.ending, resources_.lexicon);
    if (!out.clue_flags && resources_.trees) out.clue_flags = label_clue_words(out, *resources_.trees, config_.clue_mode);
    return out;
}

Example ExampleBuilder::build(const Story& story) const {
    const Story s = labeled(story);
    Example ex;
    ex.id = s.id;
    ex.graph = graph_for(s);
    if (s.has_ending()) {
        std::vector<std::size_t> ids = vocab_->encode(s.ending);
        if (ids.size() > config_.max_ending_len) ids.resize(config_.max_ending_len);
        ex.decoder_input.push_back(Vocab::kBos);
        ex.decoder_input.insert(ex.decoder_input.end(), ids.begin(), ids.end());
        ex.targets = ids;
        ex.targets.push_back(Vocab::kEos);
    }
    ex.sentiment = s.sentiment.value_or(Sentiment::Neutral);
    if (s.clue_flags) ex.clue_targets = word_clue_targets(ex.graph, s, *s.clue_flags);
    return ex;
}

ShgnModel::ShgnModel(const ModelConfig& config, Vocab vocab, std::shared_ptr<const EmbeddingTable> table,
                     std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
    config_.validate();
    Rng rng(seed);
    NodeInitializer init = NodeInitializer::hash(config_.dim, config_.init_seed);
    if (config_.initializer == InitializerKind::Table) {
        if (!table) throw Error("model: table initializer selected but no embedding table supplied");
        init = NodeInitializer::table(std::move(table), config_.init_seed);
    }
    EncoderConfig ec{config_.dim, config_.heads, config_.graph_layers, config_.scaled_attention};
    encoder_ = std::make_unique<HgtEncoder>(ec, std::move(init), params_, rng);
    DecoderConfig dc{config_.dim, config_.heads, config_.dec_layers, config_.ffn_dim, config_.max_ending_len + 1};
    decoder_ = std::make_unique<TransformerDecoder>(dc, vocab_.size(), params_, rng);
    sentiment_ = std::make_unique<SentimentHead>(config_.dim, params_, rng);
    clue_ = std::make_unique<ClueHead>(config_.dim, params_, rng);
}

Tensor ShgnModel::encode(const HeteroGraph& graph) const { return encoder_->encode(graph); }

LossBreakdown ShgnModel::losses(const Example& example, const LossWeights& weights, bool single_task) const {
    if (example.decoder_input.empty()) throw Error("example '" + example.id + "' has no gold ending");
    const Tensor states = encode(example.graph);
    const Tensor logits = decoder_->forward(states, example.decoder_input);
    const GenerationLoss gen = generation_loss(logits, example.targets, Vocab::kPad);

    LossBreakdown out;
    out.generation = gen.mean;
    out.generation_sum = gen.sum;
    out.tokens = gen.tokens;
    if (single_task) {
        out.sentiment = Tensor::scalar(0.0);
        out.clue = Tensor::scalar(0.0);
        out.total = gen.mean;
        return out;
    }
    out.sentiment = sentiment_->loss(states, example.graph, example.sentiment);
    if (example.clue_targets) {
        out.clue = clue_->loss(states, example.graph, *example.clue_targets);
    } else if (weights.clue > 0.0 && !example.graph.nodes_of_type(NodeType::Word).empty()) {
        throw Error("example '" + example.id + "' has no clue labels; supply parses or a label cache");
    } else {
        out.clue = Tensor::scalar(0.0);
    }
    if (!std::isfinite(out.generation.item()) || !std::isfinite(out.sentiment.item()) || !std::isfinite(out.clue.item())) {
        weights.validate();
        out.total = Tensor::scalar(std::numeric_limits<double>::quiet_NaN());
        return out;
    }
    out.total = total_loss(out.generation, out.sentiment, out.clue, weights);
    return out;
}

BeamOptions ShgnModel::beam_options(std::size_t beam_size, bool length_norm) const {
    BeamOptions o;
    o.beam_size = beam_size;
    o.max_len = config_.max_ending_len + 1;  // room for EOS after a maximal ending
    o.length_norm = length_norm;
    o.bos = Vocab::kBos;
    o.eos = Vocab::kEos;
    return o;
}

GenerationResult ShgnModel::generate(const HeteroGraph& graph, const BeamOptions& options) const {
    NoGradGuard guard;
    const Tensor states = encode(graph);
    return beam_search([&](std::span<const std::size_t> prefix) { return decoder_->next_log_probs(states, prefix); },
                       options);
}

GenerationResult ShgnModel::generate_greedy(const HeteroGraph& graph, const BeamOptions& options) const {
    NoGradGuard guard;
    const Tensor states = encode(graph);
    return greedy_decode([&](std::span<const std::size_t> prefix) { return decoder_->next_log_probs(states, prefix); },
                         options);
}

}  // namespace shgn
