#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "shgn/corpus.hpp"

namespace shgn {

enum class NodeType { Global = 0, Knowledge = 1, Sentence = 2, Word = 3 };
inline constexpr std::size_t kNumNodeTypes = 4;

enum class EdgeType {
    GlobalToSentence = 0,
    SentenceToGlobal = 1,
    SentenceToSentence = 2,
    KnowledgeToSentence = 3,
    SentenceToKnowledge = 4,
    WordToSentence = 5,
    SentenceToWord = 6,
};
inline constexpr std::size_t kNumEdgeTypes = 7;

inline constexpr std::array<NodeType, kNumNodeTypes> kAllNodeTypes = {NodeType::Global, NodeType::Knowledge,
                                                                       NodeType::Sentence, NodeType::Word};
inline constexpr std::array<EdgeType, kNumEdgeTypes> kAllEdgeTypes = {
    EdgeType::GlobalToSentence,    EdgeType::SentenceToGlobal, EdgeType::SentenceToSentence,
    EdgeType::KnowledgeToSentence, EdgeType::SentenceToKnowledge, EdgeType::WordToSentence,
    EdgeType::SentenceToWord};

std::string_view node_type_name(NodeType t);
std::string_view edge_type_name(EdgeType t);
NodeType parse_node_type(std::string_view name);
EdgeType parse_edge_type(std::string_view name);
// (source type, destination type) an edge of this kind must connect.
std::pair<NodeType, NodeType> edge_endpoints(EdgeType t);

struct GraphNode {
    std::string id;
    NodeType type;
    std::string text;
};

struct GraphEdge {
    std::size_t src;  // node index
    std::size_t dst;
    EdgeType type;
};

enum class Direction { In, Out };

// Typed directed graph. Node ids follow "g", "s<k>", "w:<token>", "k:<concept>".
// Insertion enforces unique node ids, endpoint/type consistency, no self-loops and no
// duplicate (src, dst, type) triples.
class HeteroGraph {
public:
    std::size_t add_node(std::string id, NodeType type, std::string text);
    void add_edge(std::string_view src, std::string_view dst, EdgeType type);
    void add_edge(std::size_t src, std::size_t dst, EdgeType type);

    const std::vector<GraphNode>& nodes() const { return nodes_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    const GraphNode& node(std::size_t i) const { return nodes_.at(i); }
    std::optional<std::size_t> find(std::string_view id) const;
    std::size_t index_of(std::string_view id) const;  // throws on unknown id

    // Sentence node indices in context order.
    std::vector<std::size_t> sentence_order() const;
    std::vector<std::size_t> nodes_of_type(NodeType t) const;

    // Neighbors in edge insertion order. In: sources of edges ending at the node.
    std::vector<std::pair<std::string, EdgeType>> neighbors(std::string_view id, Direction direction) const;

    std::string to_json(int indent = 2) const;
    static HeteroGraph from_json(std::string_view text);

private:
    std::vector<GraphNode> nodes_;
    std::vector<GraphEdge> edges_;
    std::unordered_map<std::string, std::size_t> index_;
    std::set<std::tuple<std::size_t, std::size_t, int>> edge_set_;
};

struct ConceptHit {
    std::string concept_text;
    std::set<std::size_t> source_sentences;                      // 1-based sentence numbers
    std::set<std::pair<std::size_t, std::size_t>> trigger_tokens;  // (sentence number, 0-based token)

    bool operator==(const ConceptHit&) const = default;
};

// Endpoint index over a knowledge edge list: token -> concepts one hop away.
class KnowledgeIndex {
public:
    explicit KnowledgeIndex(const std::vector<KnowledgeEdge>& edges);
    const std::vector<std::string>& neighbors(std::string_view token) const;

private:
    std::unordered_map<std::string, std::vector<std::string>> adjacency_;
};

// Content POS tags that may trigger retrieval when parses are supplied.
bool is_retrieval_pos(std::string_view upos);

// Hits are ordered by first trigger (sentence, token, knowledge order). When `trees` has a
// parse for a sentence, its UPOS column filters triggers; otherwise every non-stopword
// content token is eligible.
std::vector<ConceptHit> retrieve_concepts(const Story& story, const KnowledgeIndex& knowledge,
                                          const Stopwords& stopwords, const DepTrees* trees = nullptr);
std::vector<ConceptHit> retrieve_concepts(const Story& story, const std::vector<KnowledgeEdge>& knowledge,
                                          const Stopwords& stopwords, const DepTrees* trees = nullptr);

// Ablation switches; the default builds the full four-type graph.
struct GraphOptions {
    bool include_global = true;
    bool include_knowledge = true;
    bool include_words = true;

    bool operator==(const GraphOptions&) const = default;
};

// Node order: g, s1..sμ, word nodes by first occurrence, knowledge nodes in hit order.
HeteroGraph build_graph(const Story& story, const std::vector<ConceptHit>& hits, const Stopwords& stopwords,
                        const GraphOptions& options = {});

// Structural invariants of a built story graph; returns human-readable violations.
std::vector<std::string> check_graph_invariants(const HeteroGraph& graph, const Story& story,
                                                const Stopwords& stopwords, const GraphOptions& options = {});

}  // namespace shgn
