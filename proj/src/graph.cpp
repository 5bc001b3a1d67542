#include "shgn/graph.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include <json.hpp>

#include "shgn/error.hpp"

namespace shgn {

namespace {
constexpr std::array<std::string_view, kNumNodeTypes> kNodeNames = {"global", "knowledge", "sentence", "word"};
constexpr std::array<std::string_view, kNumEdgeTypes> kEdgeNames = {
    "global_to_sentence",    "sentence_to_global", "sentence_to_sentence", "knowledge_to_sentence",
    "sentence_to_knowledge", "word_to_sentence",   "sentence_to_word"};
}  // namespace

std::string_view node_type_name(NodeType t) { return kNodeNames[static_cast<std::size_t>(t)]; }
std::string_view edge_type_name(EdgeType t) { return kEdgeNames[static_cast<std::size_t>(t)]; }

NodeType parse_node_type(std::string_view name) {
    for (std::size_t i = 0; i < kNumNodeTypes; ++i)
        if (kNodeNames[i] == name) return static_cast<NodeType>(i);
    throw Error("unknown node type '" + std::string(name) + "'");
}

EdgeType parse_edge_type(std::string_view name) {
    for (std::size_t i = 0; i < kNumEdgeTypes; ++i)
        if (kEdgeNames[i] == name) return static_cast<EdgeType>(i);
    throw Error("unknown edge type '" + std::string(name) + "'");
}

std::pair<NodeType, NodeType> edge_endpoints(EdgeType t) {
    switch (t) {
        case EdgeType::GlobalToSentence: return {NodeType::Global, NodeType::Sentence};
        case EdgeType::SentenceToGlobal: return {NodeType::Sentence, NodeType::Global};
        case EdgeType::SentenceToSentence: return {NodeType::Sentence, NodeType::Sentence};
        case EdgeType::KnowledgeToSentence: return {NodeType::Knowledge, NodeType::Sentence};
        case EdgeType::SentenceToKnowledge: return {NodeType::Sentence, NodeType::Knowledge};
        case EdgeType::WordToSentence: return {NodeType::Word, NodeType::Sentence};
        case EdgeType::SentenceToWord: return {NodeType::Sentence, NodeType::Word};
    }
    throw Error("invalid edge type");
}

std::size_t HeteroGraph::add_node(std::string id, NodeType type, std::string text) {
    if (index_.contains(id)) throw Error("duplicate node id '" + id + "'");
    const std::size_t idx = nodes_.size();
    index_.emplace(id, idx);
    nodes_.push_back({std::move(id), type, std::move(text)});
    return idx;
}

void HeteroGraph::add_edge(std::string_view src, std::string_view dst, EdgeType type) {
    add_edge(index_of(src), index_of(dst), type);
}

void HeteroGraph::add_edge(std::size_t src, std::size_t dst, EdgeType type) {
    if (src >= nodes_.size() || dst >= nodes_.size()) throw Error("edge endpoint out of range");
    if (src == dst) throw Error("self-loop on '" + nodes_[src].id + "'");
    const auto [st, dt] = edge_endpoints(type);
    if (nodes_[src].type != st || nodes_[dst].type != dt) {
        throw Error("edge " + nodes_[src].id + " -> " + nodes_[dst].id + " does not match type " +
                    std::string(edge_type_name(type)));
    }
    if (!edge_set_.emplace(src, dst, static_cast<int>(type)).second) {
        throw Error("duplicate edge " + nodes_[src].id + " -> " + nodes_[dst].id);
    }
    edges_.push_back({src, dst, type});
}

std::optional<std::size_t> HeteroGraph::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t HeteroGraph::index_of(std::string_view id) const {
    if (auto idx = find(id)) return *idx;
    throw Error("unknown node id '" + std::string(id) + "'");
}

std::vector<std::size_t> HeteroGraph::sentence_order() const {
    // Sentence ids are "s<k>"; order by k regardless of insertion order.
    std::vector<std::pair<std::size_t, std::size_t>> keyed;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].type != NodeType::Sentence) continue;
        std::size_t k = i;
        try {
            k = std::stoul(nodes_[i].id.substr(1));
        } catch (const std::exception&) {
        }
        keyed.emplace_back(k, i);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::size_t> out;
    for (auto& [k, i] : keyed) out.push_back(i);
    return out;
}

std::vector<std::size_t> HeteroGraph::nodes_of_type(NodeType t) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].type == t) out.push_back(i);
    return out;
}

std::vector<std::pair<std::string, EdgeType>> HeteroGraph::neighbors(std::string_view id, Direction direction) const {
    const std::size_t idx = index_of(id);
    std::vector<std::pair<std::string, EdgeType>> out;
    for (const GraphEdge& e : edges_) {
        if (direction == Direction::In && e.dst == idx) out.emplace_back(nodes_[e.src].id, e.type);
        if (direction == Direction::Out && e.src == idx) out.emplace_back(nodes_[e.dst].id, e.type);
    }
    return out;
}

std::string HeteroGraph::to_json(int indent) const {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const GraphNode& n : nodes_) {
        j["nodes"].push_back({{"id", n.id}, {"type", node_type_name(n.type)}, {"text", n.text}});
    }
    j["edges"] = nlohmann::ordered_json::array();
    for (const GraphEdge& e : edges_) {
        j["edges"].push_back({{"src", nodes_[e.src].id}, {"dst", nodes_[e.dst].id}, {"type", edge_type_name(e.type)}});
    }
    return j.dump(indent);
}

HeteroGraph HeteroGraph::from_json(std::string_view text) {
    const auto j = nlohmann::json::parse(text);
    HeteroGraph g;
    for (const auto& n : j.at("nodes")) {
        g.add_node(n.at("id").get<std::string>(), parse_node_type(n.at("type").get<std::string>()),
                   n.at("text").get<std::string>());
    }
    for (const auto& e : j.at("edges")) {
        g.add_edge(e.at("src").get<std::string>(), e.at("dst").get<std::string>(),
                   parse_edge_type(e.at("type").get<std::string>()));
    }
    return g;
}

KnowledgeIndex::KnowledgeIndex(const std::vector<KnowledgeEdge>& edges) {
    for (const KnowledgeEdge& e : edges) {
        auto add = [this](const std::string& from, const std::string& to) {
            auto& list = adjacency_[from];
            if (std::find(list.begin(), list.end(), to) == list.end()) list.push_back(to);
        };
        add(e.head, e.tail);
        add(e.tail, e.head);
    }
}

const std::vector<std::string>& KnowledgeIndex::neighbors(std::string_view token) const {
    static const std::vector<std::string> empty;
    auto it = adjacency_.find(std::string(token));
    return it == adjacency_.end() ? empty : it->second;
}

bool is_retrieval_pos(std::string_view upos) {
    return upos == "NOUN" || upos == "VERB" || upos == "ADJ" || upos == "ADV";
}

std::vector<ConceptHit> retrieve_concepts(const Story& story, const KnowledgeIndex& knowledge,
                                          const Stopwords& stopwords, const DepTrees* trees) {
    std::vector<ConceptHit> hits;
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t k = 0; k < story.context.size(); ++k) {
        const Tokens& tokens = story.context[k];
        const DepTree* tree = nullptr;
        if (trees) {
            auto it = trees->find(dep_tree_key(story.id, k + 1));
            if (it != trees->end()) {
                tree = &it->second;
                if (tree->size() != tokens.size()) {
                    throw Error("parse '" + tree->sentence_id + "' has " + std::to_string(tree->size()) +
                                " tokens, sentence has " + std::to_string(tokens.size()));
                }
            }
        }
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            if (!stopwords.is_content(tokens[t])) continue;
            if (tree && !is_retrieval_pos(tree->upos[t])) continue;
            for (const std::string& c : knowledge.neighbors(tokens[t])) {
                auto [it, inserted] = slot.emplace(c, hits.size());
                if (inserted) hits.push_back(ConceptHit{c, {}, {}});
                ConceptHit& hit = hits[it->second];
                hit.source_sentences.insert(k + 1);
                hit.trigger_tokens.emplace(k + 1, t);
            }
        }
    }
    return hits;
}

std::vector<ConceptHit> retrieve_concepts(const Story& story, const std::vector<KnowledgeEdge>& knowledge,
                                          const Stopwords& stopwords, const DepTrees* trees) {
    return retrieve_concepts(story, KnowledgeIndex(knowledge), stopwords, trees);
}

HeteroGraph build_graph(const Story& story, const std::vector<ConceptHit>& hits, const Stopwords& stopwords,
                        const GraphOptions& options) {
    if (story.context.empty()) throw Error("story '" + story.id + "' has no context sentences");
    HeteroGraph g;
    const std::size_t mu = story.context.size();

    std::optional<std::size_t> global;
    if (options.include_global) global = g.add_node("g", NodeType::Global, "");
    std::vector<std::size_t> sentences;
    for (std::size_t k = 0; k < mu; ++k) {
        sentences.push_back(g.add_node("s" + std::to_string(k + 1), NodeType::Sentence, story.context_text[k]));
    }

    // Word nodes merged across sentences; each keeps the sentences it occurs in.
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> words;
    if (options.include_words) {
        std::unordered_map<std::string, std::size_t> slot;
        for (std::size_t k = 0; k < mu; ++k) {
            for (const std::string& tok : story.context[k]) {
                if (!stopwords.is_content(tok)) continue;
                auto [it, inserted] = slot.emplace(tok, words.size());
                if (inserted) words.emplace_back(g.add_node("w:" + tok, NodeType::Word, tok), std::vector<std::size_t>{});
                auto& occ = words[it->second].second;
                if (occ.empty() || occ.back() != k) occ.push_back(k);
            }
        }
    }

    std::vector<std::pair<std::size_t, const ConceptHit*>> concepts;
    if (options.include_knowledge) {
        for (const ConceptHit& hit : hits) {
            if (hit.source_sentences.size() < 2) continue;
            for (std::size_t s : hit.source_sentences) {
                if (s == 0 || s > mu) throw Error("concept '" + hit.concept_text + "' cites sentence " + std::to_string(s));
            }
            const std::string id = "k:" + hit.concept_text;
            if (g.find(id)) continue;
            concepts.emplace_back(g.add_node(id, NodeType::Knowledge, hit.concept_text), &hit);
        }
    }

    if (global) {
        for (std::size_t s : sentences) {
            g.add_edge(*global, s, EdgeType::GlobalToSentence);
            g.add_edge(s, *global, EdgeType::SentenceToGlobal);
        }
    }
    for (std::size_t k = 0; k + 1 < mu; ++k) g.add_edge(sentences[k], sentences[k + 1], EdgeType::SentenceToSentence);
    for (const auto& [w, occ] : words) {
        for (std::size_t k : occ) {
            g.add_edge(w, sentences[k], EdgeType::WordToSentence);
            g.add_edge(sentences[k], w, EdgeType::SentenceToWord);
        }
    }
    for (const auto& [c, hit] : concepts) {
        for (std::size_t s : hit->source_sentences) {
            g.add_edge(c, sentences[s - 1], EdgeType::KnowledgeToSentence);
            g.add_edge(sentences[s - 1], c, EdgeType::SentenceToKnowledge);
        }
    }
    return g;
}

std::vector<std::string> check_graph_invariants(const HeteroGraph& graph, const Story& story,
                                                const Stopwords& stopwords, const GraphOptions& options) {
    std::vector<std::string> problems;
    const auto globals = graph.nodes_of_type(NodeType::Global);
    const auto sentences = graph.nodes_of_type(NodeType::Sentence);
    if (globals.size() != (options.include_global ? 1u : 0u)) {
        problems.push_back("expected " + std::to_string(options.include_global ? 1 : 0) + " global node(s), found " +
                           std::to_string(globals.size()));
    }
    if (sentences.size() != story.context.size()) problems.push_back("sentence node count differs from context length");

    std::set<std::tuple<std::size_t, std::size_t, int>> seen;
    for (const GraphEdge& e : graph.edges()) {
        const auto [st, dt] = edge_endpoints(e.type);
        if (graph.node(e.src).type != st || graph.node(e.dst).type != dt) problems.push_back("edge type mismatch");
        if (!seen.emplace(e.src, e.dst, static_cast<int>(e.type)).second) problems.push_back("duplicate edge");
        if (e.src == e.dst) problems.push_back("self-loop");
    }

    std::set<std::string> payloads;
    for (std::size_t w : graph.nodes_of_type(NodeType::Word)) {
        const std::string& tok = graph.node(w).text;
        if (!payloads.insert("w" + tok).second) problems.push_back("duplicate word node '" + tok + "'");
        if (!stopwords.is_content(tok)) problems.push_back("word node '" + tok + "' is a stopword");
        bool occurs = false;
        for (const Tokens& s : story.context) occurs = occurs || std::find(s.begin(), s.end(), tok) != s.end();
        if (!occurs) problems.push_back("word node '" + tok + "' not in context");
    }
    for (std::size_t k : graph.nodes_of_type(NodeType::Knowledge)) {
        const std::string& c = graph.node(k).text;
        if (!payloads.insert("k" + c).second) problems.push_back("duplicate knowledge node '" + c + "'");
        std::set<std::size_t> srcs;
        for (const GraphEdge& e : graph.edges())
            if (e.dst == k && e.type == EdgeType::SentenceToKnowledge) srcs.insert(e.src);
        if (srcs.size() < 2) problems.push_back("knowledge node '" + c + "' has fewer than 2 sentence in-neighbors");
    }

    // Sentence chain s1 -> s2 -> ... -> sμ and nothing else.
    const auto order = graph.sentence_order();
    std::set<std::pair<std::size_t, std::size_t>> chain;
    for (const GraphEdge& e : graph.edges())
        if (e.type == EdgeType::SentenceToSentence) chain.emplace(e.src, e.dst);
    std::set<std::pair<std::size_t, std::size_t>> expected;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) expected.emplace(order[k], order[k + 1]);
    if (chain != expected) problems.push_back("sentence edges are not the simple path s1 -> ... -> s_mu");
    return problems;
}

}  // namespace shgn
