#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "shgn/corpus.hpp"
#include "shgn/graph.hpp"
#include "shgn/params.hpp"

namespace shgn {

// Deterministic unit-norm vector for a key: FNV-1a of the normalized key, xor the seed,
// drives a SplitMix64 stream mapped to [-1, 1); the result is L2-normalized.
std::vector<double> hash_embedding(std::string_view key, std::size_t dimension, std::uint64_t seed);

// Provides h0 for non-global nodes. Sentence nodes are keyed by full sentence text, word
// nodes by token and knowledge nodes by concept string. Table misses fall back to the hash
// provider at the table's dimension, so lookup is total.
class NodeInitializer {
public:
    static NodeInitializer hash(std::size_t dimension, std::uint64_t seed);
    static NodeInitializer table(std::shared_ptr<const EmbeddingTable> table, std::uint64_t fallback_seed);

    std::size_t dimension() const { return dimension_; }
    bool uses_table() const { return static_cast<bool>(table_); }
    std::vector<double> vector_for(const GraphNode& node) const;

private:
    NodeInitializer(std::size_t dimension, std::uint64_t seed, std::shared_ptr<const EmbeddingTable> table)
        : dimension_(dimension), seed_(seed), table_(std::move(table)) {}

    std::size_t dimension_;
    std::uint64_t seed_;
    std::shared_ptr<const EmbeddingTable> table_;
};

struct EncoderConfig {
    std::size_t dim = 64;
    std::size_t heads = 4;
    std::size_t layers = 1;
    // Divide attention logits by sqrt(head dim); off reproduces the unscaled bilinear score.
    bool scaled_attention = false;
};

// Attention over in-neighbors, aligned with graph.edges(): per_head[i] is [E x 1].
struct EdgeAttention {
    std::vector<Tensor> logits;
    std::vector<Tensor> weights;
};

// Heterogeneous graph transformer stack followed by the final 2d -> d projection.
// Row-vector convention throughout: k = h W_k, q = h W_q, score = (k W_att) . q.
class HgtEncoder {
public:
    HgtEncoder(const EncoderConfig& config, NodeInitializer initializer, ParamStore& params, Rng& rng);

    const EncoderConfig& config() const { return config_; }

    // h0 for every node, in graph node order. The global node uses a learned vector.
    Tensor initialize(const HeteroGraph& graph) const;

    // layer is 1-based.
    EdgeAttention attention(const HeteroGraph& graph, const Tensor& states, std::size_t layer) const;
    // Per-edge messages [E x d], heads concatenated.
    Tensor messages(const HeteroGraph& graph, const Tensor& states, std::size_t layer) const;
    Tensor aggregate(const HeteroGraph& graph, const Tensor& states, const EdgeAttention& attention,
                     const Tensor& messages, std::size_t layer) const;
    Tensor layer(const HeteroGraph& graph, const Tensor& states, std::size_t layer) const;
    Tensor finalize(const Tensor& states_last, const Tensor& states_initial) const;

    // initialize -> layers -> finalize.
    Tensor encode(const HeteroGraph& graph) const;

    static std::string param_name(std::size_t layer, std::string_view role, std::string_view type);

private:
    struct LayerParams {
        std::array<Tensor, kNumNodeTypes> key, query, message, aggregate;
        std::array<Tensor, kNumEdgeTypes> attention, edge_message;
    };

    EncoderConfig config_;
    NodeInitializer initializer_;
    std::vector<LayerParams> layers_;
    Tensor final_;
    Tensor global_;
    Tensor adapter_;  // undefined when the initializer already produces width d
};

}  // namespace shgn
