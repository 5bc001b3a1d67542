#include "shgn/auxtasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "shgn/error.hpp"
#include "shgn/ops.hpp"

namespace shgn {

double compound_score(const Tokens& tokens, const SentimentLexicon& lexicon) {
    double sum = 0.0, squares = 0.0;
    for (const std::string& t : tokens) {
        const double v = lexicon.valence(t);
        sum += v;
        squares += v * v;
    }
    return sum / std::sqrt(squares + 15.0);
}

Sentiment label_sentiment(const Tokens& ending, const SentimentLexicon& lexicon) {
    const double c = compound_score(ending, lexicon);
    if (c >= 0.05) return Sentiment::Positive;
    if (c <= -0.05) return Sentiment::Negative;
    return Sentiment::Neutral;
}

std::vector<bool> clue_flags_for_tree(const DepTree& tree, ClueMode mode) {
    const auto deg = tree.degrees();
    std::vector<bool> flags(deg.size(), false);
    if (mode == ClueMode::TopTwoRanks) {
        // Competition rank: 1 + number of tokens with a strictly larger degree.
        std::vector<std::size_t> sorted(deg);
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        const std::size_t threshold = sorted[std::min<std::size_t>(1, sorted.size() - 1)];
        for (std::size_t i = 0; i < deg.size(); ++i) flags[i] = deg[i] >= threshold;
        return flags;
    }
    std::vector<std::size_t> order(deg.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return deg[a] > deg[b]; });
    for (std::size_t i = 0; i < std::min<std::size_t>(2, order.size()); ++i) flags[order[i]] = true;
    return flags;
}

std::vector<std::vector<bool>> label_clue_words(const Story& story, const DepTrees& trees, ClueMode mode) {
    std::vector<std::vector<bool>> out;
    for (std::size_t k = 0; k < story.context.size(); ++k) {
        const std::string key = dep_tree_key(story.id, k + 1);
        auto it = trees.find(key);
        if (it == trees.end()) throw Error("no dependency parse for sentence '" + key + "'");
        if (it->second.size() != story.context[k].size()) {
            throw Error("parse '" + key + "' has " + std::to_string(it->second.size()) + " tokens, sentence has " +
                        std::to_string(story.context[k].size()));
        }
        out.push_back(clue_flags_for_tree(it->second, mode));
    }
    return out;
}

std::vector<double> word_clue_targets(const HeteroGraph& graph, const Story& story,
                                      const std::vector<std::vector<bool>>& flags) {
    if (flags.size() != story.context.size()) throw Error("clue flags do not cover every context sentence");
    std::set<std::string> positive;
    for (std::size_t k = 0; k < story.context.size(); ++k) {
        if (flags[k].size() != story.context[k].size()) throw Error("clue flags length differs from sentence length");
        for (std::size_t i = 0; i < flags[k].size(); ++i)
            if (flags[k][i]) positive.insert(story.context[k][i]);
    }
    std::vector<double> targets;
    for (std::size_t w : graph.nodes_of_type(NodeType::Word)) targets.push_back(positive.contains(graph.node(w).text) ? 1.0 : 0.0);
    return targets;
}

void write_label_cache(const std::filesystem::path& path, const std::vector<Story>& stories) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (const Story& s : stories) {
        if (!s.sentiment || !s.clue_flags) throw Error("story '" + s.id + "' is not labeled");
        nlohmann::ordered_json rec;
        rec["id"] = s.id;
        rec["sentiment"] = std::string(sentiment_name(*s.sentiment));
        rec["clue_flags"] = *s.clue_flags;
        out << rec.dump() << '\n';
    }
}

std::map<std::string, StoryLabels> load_label_cache(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::map<std::string, StoryLabels> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto rec = nlohmann::json::parse(line);
            StoryLabels labels;
            labels.sentiment = parse_sentiment(rec.at("sentiment").get<std::string>());
            labels.clue_flags = rec.at("clue_flags").get<std::vector<std::vector<bool>>>();
            out[rec.at("id").get<std::string>()] = std::move(labels);
        } catch (const std::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return out;
}

void LossWeights::validate() const {
    if (!(sentiment >= 0.0) || !(clue >= 0.0) || sentiment + clue > 1.0) {
        throw Error("loss weights must satisfy lambda1 >= 0, lambda2 >= 0, lambda1 + lambda2 <= 1");
    }
}

SentimentHead::SentimentHead(std::size_t dim, ParamStore& params, Rng& rng)
    : weight_(params.add("aux.sentiment", {dim, 3}, Init::Xavier, rng)) {}

Tensor SentimentHead::logits(const Tensor& states, const HeteroGraph& graph) const {
    const auto sentences = graph.nodes_of_type(NodeType::Sentence);
    if (sentences.empty()) throw Error("sentiment head: graph has no sentence nodes");
    return ops::matmul(ops::sum(ops::gather_rows(states, sentences), 0), weight_);
}

Tensor SentimentHead::loss(const Tensor& states, const HeteroGraph& graph, Sentiment label) const {
    const std::size_t target[] = {static_cast<std::size_t>(label)};
    return ops::cross_entropy(logits(states, graph), target, ops::Reduction::Mean);
}

ClueHead::ClueHead(std::size_t dim, ParamStore& params, Rng& rng)
    : weight_(params.add("aux.clue", {dim, 1}, Init::Xavier, rng)) {}

Tensor ClueHead::logits(const Tensor& states, const HeteroGraph& graph) const {
    const auto words = graph.nodes_of_type(NodeType::Word);
    if (words.empty()) return {};
    return ops::matmul(ops::gather_rows(states, words), weight_);
}

std::vector<double> ClueHead::probabilities(const Tensor& states, const HeteroGraph& graph) const {
    const Tensor l = logits(states, graph);
    if (!l.defined()) return {};
    const Tensor p = ops::sigmoid(l);
    return {p.data().begin(), p.data().end()};
}

Tensor ClueHead::loss(const Tensor& states, const HeteroGraph& graph, const std::vector<double>& targets) const {
    const Tensor l = logits(states, graph);
    if (!l.defined()) {
        if (!targets.empty()) throw Error("clue head: targets given for a graph without word nodes");
        return Tensor::scalar(0.0);
    }
    return ops::binary_cross_entropy(l, targets);
}

double total_loss(double generation, double sentiment, double clue, const LossWeights& w) {
    if (!std::isfinite(generation) || !std::isfinite(sentiment) || !std::isfinite(clue)) {
        throw Error("total_loss: non-finite component");
    }
    w.validate();
    return w.sentiment * sentiment + w.clue * clue + (1.0 - w.sentiment - w.clue) * generation;
}

Tensor total_loss(const Tensor& generation, const Tensor& sentiment, const Tensor& clue, const LossWeights& w) {
    // Validates and checks finiteness on the forward values.
    (void)total_loss(generation.item(), sentiment.item(), clue.item(), w);
    return ops::add(ops::add(ops::scalar_mul(sentiment, w.sentiment), ops::scalar_mul(clue, w.clue)),
                    ops::scalar_mul(generation, 1.0 - w.sentiment - w.clue));
}

}  // namespace shgn
