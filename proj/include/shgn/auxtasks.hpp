#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "shgn/corpus.hpp"
#include "shgn/graph.hpp"
#include "shgn/params.hpp"

namespace shgn {

// Normalized valence sum: sum(v) / sqrt(sum(v^2) + 15).
double compound_score(const Tokens& tokens, const SentimentLexicon& lexicon);
// positive if compound >= 0.05, negative if <= -0.05, neutral otherwise.
Sentiment label_sentiment(const Tokens& ending, const SentimentLexicon& lexicon);

enum class ClueMode {
    TopTwoRanks,  // tokens of competition rank <= 2 by degree, ties included
    ExactlyTwo,   // the two highest-degree tokens, earlier index first on ties
};

std::vector<bool> clue_flags_for_tree(const DepTree& tree, ClueMode mode = ClueMode::TopTwoRanks);
// Flags per context token; throws when a sentence has no parse or the token counts differ.
std::vector<std::vector<bool>> label_clue_words(const Story& story, const DepTrees& trees,
                                                ClueMode mode = ClueMode::TopTwoRanks);
// One 0/1 target per word node (graph order); a merged word is positive if flagged anywhere.
std::vector<double> word_clue_targets(const HeteroGraph& graph, const Story& story,
                                      const std::vector<std::vector<bool>>& flags);

struct StoryLabels {
    Sentiment sentiment = Sentiment::Neutral;
    std::vector<std::vector<bool>> clue_flags;
};

// JSONL records {id, sentiment, clue_flags}.
void write_label_cache(const std::filesystem::path& path, const std::vector<Story>& stories);
std::map<std::string, StoryLabels> load_label_cache(const std::filesystem::path& path);

struct LossWeights {
    double sentiment = 0.1;  // lambda_1
    double clue = 0.1;       // lambda_2

    void validate() const;
    bool operator==(const LossWeights&) const = default;
};

// Class logits [1 x 3] (negative, neutral, positive) from the summed sentence-node states.
class SentimentHead {
public:
    SentimentHead(std::size_t dim, ParamStore& params, Rng& rng);
    Tensor logits(const Tensor& states, const HeteroGraph& graph) const;
    Tensor loss(const Tensor& states, const HeteroGraph& graph, Sentiment label) const;

private:
    Tensor weight_;
};

// One logit per word node [W x 1]; empty graphs of words yield an undefined tensor.
class ClueHead {
public:
    ClueHead(std::size_t dim, ParamStore& params, Rng& rng);
    Tensor logits(const Tensor& states, const HeteroGraph& graph) const;
    std::vector<double> probabilities(const Tensor& states, const HeteroGraph& graph) const;
    // Mean binary cross-entropy over word nodes; exactly 0 when there are none.
    Tensor loss(const Tensor& states, const HeteroGraph& graph, const std::vector<double>& targets) const;

private:
    Tensor weight_;
};

// lambda_1 * sentiment + lambda_2 * clue + (1 - lambda_1 - lambda_2) * generation.
double total_loss(double generation, double sentiment, double clue, const LossWeights& w);
Tensor total_loss(const Tensor& generation, const Tensor& sentiment, const Tensor& clue, const LossWeights& w);

}  // namespace shgn
