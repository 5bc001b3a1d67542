#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "shgn/graph.hpp"
#include "shgn/rng.hpp"
#include "shgn/tensor.hpp"

namespace shgn::test {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(SHGN_TEST_DATA) / name; }

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Tensor random_tensor(Rng& rng, Shape shape, bool requires_grad = true, double scale = 1.0) {
    std::vector<double> v(shape.numel());
    for (double& x : v) x = rng.uniform(-scale, scale);
    return Tensor::from(shape, std::move(v), requires_grad);
}

// Random well-typed graph: one global node, 1-5 sentences, 0-5 words, 0-3 concepts, each
// optional edge kept with probability one half.
inline HeteroGraph random_graph(Rng& rng) {
    HeteroGraph g;
    g.add_node("g", NodeType::Global, "");
    const std::size_t mu = 1 + rng.below(5);
    for (std::size_t k = 1; k <= mu; ++k) g.add_node("s" + std::to_string(k), NodeType::Sentence, "sentence " + std::to_string(k));
    const std::size_t words = rng.below(6);
    for (std::size_t w = 0; w < words; ++w) g.add_node("w:" + std::to_string(w), NodeType::Word, "word" + std::to_string(w));
    const std::size_t concepts = rng.below(4);
    for (std::size_t c = 0; c < concepts; ++c) g.add_node("k:" + std::to_string(c), NodeType::Knowledge, "concept" + std::to_string(c));
    for (std::size_t k = 1; k <= mu; ++k) {
        const std::string s = "s" + std::to_string(k);
        if (rng.uniform() < 0.5) g.add_edge("g", s, EdgeType::GlobalToSentence);
        if (rng.uniform() < 0.5) g.add_edge(s, "g", EdgeType::SentenceToGlobal);
        if (k < mu && rng.uniform() < 0.5) g.add_edge(s, "s" + std::to_string(k + 1), EdgeType::SentenceToSentence);
        for (std::size_t w = 0; w < words; ++w) {
            if (rng.uniform() < 0.5) g.add_edge("w:" + std::to_string(w), s, EdgeType::WordToSentence);
            if (rng.uniform() < 0.5) g.add_edge(s, "w:" + std::to_string(w), EdgeType::SentenceToWord);
        }
        for (std::size_t c = 0; c < concepts; ++c) {
            if (rng.uniform() < 0.5) g.add_edge("k:" + std::to_string(c), s, EdgeType::KnowledgeToSentence);
            if (rng.uniform() < 0.5) g.add_edge(s, "k:" + std::to_string(c), EdgeType::SentenceToKnowledge);
        }
    }
    return g;
}

}  // namespace shgn::test
