#include "shgn/encoder.hpp"

#include <cmath>

#include "shgn/error.hpp"
#include "shgn/ops.hpp"

namespace shgn {

std::vector<double> hash_embedding(std::string_view key, std::size_t dimension, std::uint64_t seed) {
    const std::string norm = EmbeddingTable::normalize_key(key);
    std::uint64_t state = fnv1a64(norm.data(), norm.size()) ^ seed;
    std::vector<double> v(dimension);
    double sq = 0.0;
    for (double& x : v) {
        x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
        sq += x * x;
    }
    const double norm_len = std::sqrt(sq);
    if (norm_len > 0.0)
        for (double& x : v) x /= norm_len;
    return v;
}

NodeInitializer NodeInitializer::hash(std::size_t dimension, std::uint64_t seed) {
    if (dimension == 0) throw Error("hash initializer dimension must be positive");
    return NodeInitializer(dimension, seed, nullptr);
}

NodeInitializer NodeInitializer::table(std::shared_ptr<const EmbeddingTable> table, std::uint64_t fallback_seed) {
    if (!table) throw Error("null embedding table");
    const std::size_t d = table->dimension();
    return NodeInitializer(d, fallback_seed, std::move(table));
}

std::vector<double> NodeInitializer::vector_for(const GraphNode& node) const {
    if (table_) {
        if (const auto* row = table_->find(node.text)) return *row;
    }
    return hash_embedding(node.text, dimension_, seed_);
}

std::string HgtEncoder::param_name(std::size_t layer, std::string_view role, std::string_view type) {
    return "hgt.L" + std::to_string(layer) + "." + std::string(role) + "." + std::string(type);
}

HgtEncoder::HgtEncoder(const EncoderConfig& config, NodeInitializer initializer, ParamStore& params, Rng& rng)
    : config_(config), initializer_(std::move(initializer)) {
    const std::size_t d = config.dim;
    if (d == 0 || config.heads == 0 || d % config.heads != 0) {
        throw Error("encoder: hidden size " + std::to_string(d) + " not divisible by " + std::to_string(config.heads) +
                    " heads");
    }
    const std::size_t dh = d / config.heads;
    global_ = params.add("init.global", {1, d}, Init::Xavier, rng);
    if (initializer_.dimension() != d) {
        adapter_ = params.add("init.adapter", {initializer_.dimension(), d}, Init::Xavier, rng);
    }
    for (std::size_t l = 1; l <= config.layers; ++l) {
        LayerParams lp;
        for (NodeType t : kAllNodeTypes) {
            const auto ti = static_cast<std::size_t>(t);
            const auto name = node_type_name(t);
            lp.key[ti] = params.add(param_name(l, "key", name), {d, d}, Init::Xavier, rng);
            lp.query[ti] = params.add(param_name(l, "query", name), {d, d}, Init::Xavier, rng);
            lp.message[ti] = params.add(param_name(l, "message", name), {d, d}, Init::Xavier, rng);
            lp.aggregate[ti] = params.add(param_name(l, "aggregate", name), {d, d}, Init::Xavier, rng);
        }
        for (EdgeType e : kAllEdgeTypes) {
            const auto ei = static_cast<std::size_t>(e);
            const auto name = edge_type_name(e);
            lp.attention[ei] = params.add(param_name(l, "attention", name), {dh, dh}, Init::Xavier, rng);
            lp.edge_message[ei] = params.add(param_name(l, "message", name), {dh, dh}, Init::Xavier, rng);
        }
        layers_.push_back(std::move(lp));
    }
    final_ = params.add("hgt.final", {2 * d, d}, Init::Xavier, rng);
}

Tensor HgtEncoder::initialize(const HeteroGraph& graph) const {
    const std::size_t n = graph.num_nodes();
    if (n == 0) throw Error("encoder: empty graph");
    std::vector<std::size_t> rows;
    std::vector<double> values;
    std::vector<std::size_t> globals;
    for (std::size_t i = 0; i < n; ++i) {
        const GraphNode& node = graph.node(i);
        if (node.type == NodeType::Global) {
            globals.push_back(i);
            continue;
        }
        const auto v = initializer_.vector_for(node);
        values.insert(values.end(), v.begin(), v.end());
        rows.push_back(i);
    }
    std::vector<Tensor> parts;
    if (!rows.empty()) {
        Tensor fixed = Tensor::from({rows.size(), initializer_.dimension()}, std::move(values));
        if (adapter_.defined()) fixed = ops::matmul(fixed, adapter_);
        parts.push_back(ops::index_add_rows(n, rows, fixed));
    }
    if (!globals.empty()) {
        std::vector<std::size_t> zero(globals.size(), 0);
        parts.push_back(ops::index_add_rows(n, globals, ops::gather_rows(global_, zero)));
    }
    Tensor h0 = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) h0 = ops::add(h0, parts[i]);
    return h0;
}

namespace {

struct EdgeGroup {
    std::vector<std::size_t> position, src, dst;
};

std::array<EdgeGroup, kNumEdgeTypes> group_edges(const HeteroGraph& graph) {
    std::array<EdgeGroup, kNumEdgeTypes> groups;
    for (std::size_t e = 0; e < graph.num_edges(); ++e) {
        const GraphEdge& edge = graph.edges()[e];
        auto& g = groups[static_cast<std::size_t>(edge.type)];
        g.position.push_back(e);
        g.src.push_back(edge.src);
        g.dst.push_back(edge.dst);
    }
    return groups;
}

// Applies a per-node-type projection: row i of the result is states[i] * weights[type(i)].
Tensor project_by_type(const HeteroGraph& graph, const Tensor& states, const std::array<Tensor, kNumNodeTypes>& weights) {
    Tensor out;
    for (NodeType t : kAllNodeTypes) {
        const auto idx = graph.nodes_of_type(t);
        if (idx.empty()) continue;
        Tensor part = ops::index_add_rows(graph.num_nodes(), idx,
                                          ops::matmul(ops::gather_rows(states, idx), weights[static_cast<std::size_t>(t)]));
        out = out.defined() ? ops::add(out, part) : part;
    }
    return out;
}

Tensor accumulate(const Tensor& acc, const Tensor& part) { return acc.defined() ? ops::add(acc, part) : part; }

void check_states(const HeteroGraph& graph, const Tensor& states, std::size_t d) {
    if (states.rows() != graph.num_nodes() || states.cols() != d) {
        throw ShapeError("encoder: states " + states.shape().str() + " for " + std::to_string(graph.num_nodes()) +
                         " nodes of width " + std::to_string(d));
    }
}

}  // namespace

EdgeAttention HgtEncoder::attention(const HeteroGraph& graph, const Tensor& states, std::size_t layer) const {
    check_states(graph, states, config_.dim);
    const LayerParams& lp = layers_.at(layer - 1);
    EdgeAttention out;
    const std::size_t e_count = graph.num_edges();
    if (e_count == 0) return out;
    const auto groups = group_edges(graph);
    const auto keys = ops::split_heads(project_by_type(graph, states, lp.key), config_.heads);
    const auto queries = ops::split_heads(project_by_type(graph, states, lp.query), config_.heads);
    std::vector<std::size_t> targets;
    for (const GraphEdge& e : graph.edges()) targets.push_back(e.dst);
    const double scale = config_.scaled_attention ? 1.0 / std::sqrt(static_cast<double>(config_.dim / config_.heads)) : 1.0;

    for (std::size_t h = 0; h < config_.heads; ++h) {
        Tensor logits;
        for (EdgeType t : kAllEdgeTypes) {
            const EdgeGroup& g = groups[static_cast<std::size_t>(t)];
            if (g.position.empty()) continue;
            Tensor k = ops::gather_rows(keys[h], g.src);
            Tensor q = ops::gather_rows(queries[h], g.dst);
            Tensor score = ops::sum(ops::mul(ops::matmul(k, lp.attention[static_cast<std::size_t>(t)]), q), 1);
            logits = accumulate(logits, ops::index_add_rows(e_count, g.position, score));
        }
        if (config_.scaled_attention) logits = ops::scalar_mul(logits, scale);
        out.weights.push_back(ops::segment_softmax(logits, targets, graph.num_nodes()));
        out.logits.push_back(std::move(logits));
    }
    return out;
}

Tensor HgtEncoder::messages(const HeteroGraph& graph, const Tensor& states, std::size_t layer) const {
    check_states(graph, states, config_.dim);
    const LayerParams& lp = layers_.at(layer - 1);
    const std::size_t e_count = graph.num_edges();
    if (e_count == 0) return {};
    const auto groups = group_edges(graph);
    const auto sources = ops::split_heads(project_by_type(graph, states, lp.message), config_.heads);
    std::vector<Tensor> heads;
    for (std::size_t h = 0; h < config_.heads; ++h) {
        Tensor msg;
        for (EdgeType t : kAllEdgeTypes) {
            const EdgeGroup& g = groups[static_cast<std::size_t>(t)];
            if (g.position.empty()) continue;
            Tensor m = ops::matmul(ops::gather_rows(sources[h], g.src), lp.edge_message[static_cast<std::size_t>(t)]);
            msg = accumulate(msg, ops::index_add_rows(e_count, g.position, m));
        }
        heads.push_back(std::move(msg));
    }
    return ops::concat(heads, 1);
}

Tensor HgtEncoder::aggregate(const HeteroGraph& graph, const Tensor& states, const EdgeAttention& attention,
                             const Tensor& messages, std::size_t layer) const {
    check_states(graph, states, config_.dim);
    const LayerParams& lp = layers_.at(layer - 1);
    if (graph.num_edges() == 0) return states;
    const std::size_t n = graph.num_nodes();
    const std::size_t dh = config_.dim / config_.heads;
    std::vector<std::size_t> targets;
    std::vector<bool> has_in(n, false);
    for (const GraphEdge& e : graph.edges()) {
        targets.push_back(e.dst);
        has_in[e.dst] = true;
    }
    std::vector<Tensor> heads;
    for (std::size_t h = 0; h < config_.heads; ++h) {
        Tensor weighted = ops::scale_rows(ops::slice_cols(messages, h * dh, dh), attention.weights.at(h));
        heads.push_back(ops::index_add_rows(n, targets, weighted));
    }
    const Tensor summed = ops::concat(heads, 1);

    // Nodes without in-neighbors keep their state; the rest add W_type(sigmoid(summed)).
    Tensor out = states;
    for (NodeType t : kAllNodeTypes) {
        std::vector<std::size_t> idx;
        for (std::size_t i : graph.nodes_of_type(t))
            if (has_in[i]) idx.push_back(i);
        if (idx.empty()) continue;
        Tensor update = ops::matmul(ops::sigmoid(ops::gather_rows(summed, idx)), lp.aggregate[static_cast<std::size_t>(t)]);
        out = ops::add(out, ops::index_add_rows(n, idx, update));
    }
    return out;
}

Tensor HgtEncoder::layer(const HeteroGraph& graph, const Tensor& states, std::size_t layer) const {
    const EdgeAttention attn = attention(graph, states, layer);
    const Tensor msgs = messages(graph, states, layer);
    return aggregate(graph, states, attn, msgs, layer);
}

Tensor HgtEncoder::finalize(const Tensor& states_last, const Tensor& states_initial) const {
    if (!(states_last.shape() == states_initial.shape()) || states_last.cols() != config_.dim) {
        throw ShapeError("finalize: states " + states_last.shape().str() + " and " + states_initial.shape().str());
    }
    const Tensor both[] = {states_last, states_initial};
    return ops::matmul(ops::concat(both, 1), final_);
}

Tensor HgtEncoder::encode(const HeteroGraph& graph) const {
    const Tensor h0 = initialize(graph);
    Tensor h = h0;
    for (std::size_t l = 1; l <= config_.layers; ++l) h = layer(graph, h, l);
    return finalize(h, h0);
}

}  // namespace shgn
