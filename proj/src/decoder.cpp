#include "shgn/decoder.hpp"

#include <cmath>
#include <limits>

#include "shgn/error.hpp"

namespace shgn {

std::vector<double> sinusoidal_positions(std::size_t positions, std::size_t dim) {
    std::vector<double> pe(positions * dim);
    for (std::size_t p = 0; p < positions; ++p) {
        for (std::size_t i = 0; i < dim; i += 2) {
            const double freq = std::pow(10000.0, static_cast<double>(i) / static_cast<double>(dim));
            pe[p * dim + i] = std::sin(static_cast<double>(p) / freq);
            if (i + 1 < dim) pe[p * dim + i + 1] = std::cos(static_cast<double>(p) / freq);
        }
    }
    return pe;
}

TransformerDecoder::Attention TransformerDecoder::make_attention(const std::string& prefix, ParamStore& params,
                                                                 Rng& rng) const {
    const std::size_t d = config_.dim;
    Attention a;
    a.wq = params.add(prefix + ".wq", {d, d}, Init::Xavier, rng);
    a.wk = params.add(prefix + ".wk", {d, d}, Init::Xavier, rng);
    a.wv = params.add(prefix + ".wv", {d, d}, Init::Xavier, rng);
    a.wo = params.add(prefix + ".wo", {d, d}, Init::Xavier, rng);
    a.bq = params.add(prefix + ".bq", {1, d}, Init::Zeros, rng);
    a.bk = params.add(prefix + ".bk", {1, d}, Init::Zeros, rng);
    a.bv = params.add(prefix + ".bv", {1, d}, Init::Zeros, rng);
    a.bo = params.add(prefix + ".bo", {1, d}, Init::Zeros, rng);
    return a;
}

TransformerDecoder::TransformerDecoder(const DecoderConfig& config, std::size_t vocab_size, ParamStore& params, Rng& rng)
    : config_(config), vocab_size_(vocab_size) {
    const std::size_t d = config.dim;
    if (d == 0 || config.heads == 0 || d % config.heads != 0) {
        throw Error("decoder: hidden size " + std::to_string(d) + " not divisible by " + std::to_string(config.heads) +
                    " heads");
    }
    if (vocab_size == 0) throw Error("decoder: empty vocabulary");
    if (config_.ffn_dim == 0) config_.ffn_dim = 4 * d;
    const std::size_t f = config_.ffn_dim;

    embedding_ = params.add("dec.embed", {vocab_size, d}, Init::Xavier, rng);
    positions_ = Tensor::from({config.max_positions, d}, sinusoidal_positions(config.max_positions, d));
    for (std::size_t l = 1; l <= config.layers; ++l) {
        const std::string p = "dec.L" + std::to_string(l);
        Block b;
        b.self = make_attention(p + ".self", params, rng);
        b.cross = make_attention(p + ".cross", params, rng);
        b.ln1_g = params.add(p + ".ln1.gamma", {1, d}, Init::Ones, rng);
        b.ln1_b = params.add(p + ".ln1.beta", {1, d}, Init::Zeros, rng);
        b.ln2_g = params.add(p + ".ln2.gamma", {1, d}, Init::Ones, rng);
        b.ln2_b = params.add(p + ".ln2.beta", {1, d}, Init::Zeros, rng);
        b.ln3_g = params.add(p + ".ln3.gamma", {1, d}, Init::Ones, rng);
        b.ln3_b = params.add(p + ".ln3.beta", {1, d}, Init::Zeros, rng);
        b.ffn_w1 = params.add(p + ".ffn.w1", {d, f}, Init::Xavier, rng);
        b.ffn_b1 = params.add(p + ".ffn.b1", {1, f}, Init::Zeros, rng);
        b.ffn_w2 = params.add(p + ".ffn.w2", {f, d}, Init::Xavier, rng);
        b.ffn_b2 = params.add(p + ".ffn.b2", {1, d}, Init::Zeros, rng);
        blocks_.push_back(std::move(b));
    }
    lnf_g_ = params.add("dec.ln_final.gamma", {1, d}, Init::Ones, rng);
    lnf_b_ = params.add("dec.ln_final.beta", {1, d}, Init::Zeros, rng);
    output_ = params.add("dec.out", {d, vocab_size}, Init::Xavier, rng);
}

Tensor TransformerDecoder::attend(const Attention& a, const Tensor& queries, const Tensor& keys_values, bool causal,
                                  std::vector<Tensor>* trace) const {
    const std::size_t heads = config_.heads;
    const std::size_t dh = config_.dim / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const auto q = ops::split_heads(ops::add_row(ops::matmul(queries, a.wq), a.bq), heads);
    const auto k = ops::split_heads(ops::add_row(ops::matmul(keys_values, a.wk), a.bk), heads);
    const auto v = ops::split_heads(ops::add_row(ops::matmul(keys_values, a.wv), a.bv), heads);

    Tensor mask;
    if (causal) {
        const std::size_t t = queries.rows();
        std::vector<double> m(t * keys_values.rows(), 0.0);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = i + 1; j < keys_values.rows(); ++j)
                m[i * keys_values.rows() + j] = -std::numeric_limits<double>::infinity();
        mask = Tensor::from({t, keys_values.rows()}, std::move(m));
    }
    std::vector<Tensor> outs;
    for (std::size_t h = 0; h < heads; ++h) {
        Tensor scores = ops::scalar_mul(ops::matmul(q[h], ops::transpose(k[h])), scale);
        if (causal) scores = ops::add(scores, mask);
        Tensor weights = ops::softmax(scores, 1);
        if (trace) trace->push_back(weights);
        outs.push_back(ops::matmul(weights, v[h]));
    }
    return ops::add_row(ops::matmul(ops::concat(outs, 1), a.wo), a.bo);
}

Tensor TransformerDecoder::forward(const Tensor& memory, std::span<const std::size_t> input_ids,
                                   AttentionTrace* trace) const {
    if (input_ids.empty()) throw Error("decoder: empty input sequence");
    if (input_ids.size() > config_.max_positions) {
        throw Error("decoder: input length " + std::to_string(input_ids.size()) + " exceeds " +
                    std::to_string(config_.max_positions) + " positions");
    }
    if (memory.cols() != config_.dim) throw ShapeError("decoder: memory " + memory.shape().str());
    for (std::size_t id : input_ids)
        if (id >= vocab_size_) throw Error("decoder: token id " + std::to_string(id) + " outside vocabulary");

    const std::size_t t = input_ids.size();
    std::vector<std::size_t> pos(t);
    for (std::size_t i = 0; i < t; ++i) pos[i] = i;
    Tensor x = ops::add(ops::scalar_mul(ops::embedding_lookup(embedding_, input_ids), std::sqrt(static_cast<double>(config_.dim))),
                        ops::gather_rows(positions_, pos));

    for (const Block& b : blocks_) {
        std::vector<Tensor>* self_trace = nullptr;
        std::vector<Tensor>* cross_trace = nullptr;
        if (trace) {
            self_trace = &trace->self.emplace_back();
            cross_trace = &trace->cross.emplace_back();
        }
        const Tensor n1 = ops::layer_norm(x, b.ln1_g, b.ln1_b);
        x = ops::add(x, attend(b.self, n1, n1, true, self_trace));
        const Tensor n2 = ops::layer_norm(x, b.ln2_g, b.ln2_b);
        x = ops::add(x, attend(b.cross, n2, memory, false, cross_trace));
        const Tensor n3 = ops::layer_norm(x, b.ln3_g, b.ln3_b);
        const Tensor hidden = ops::relu(ops::add_row(ops::matmul(n3, b.ffn_w1), b.ffn_b1));
        x = ops::add(x, ops::add_row(ops::matmul(hidden, b.ffn_w2), b.ffn_b2));
    }
    return ops::matmul(ops::layer_norm(x, lnf_g_, lnf_b_), output_);
}

std::vector<double> TransformerDecoder::next_log_probs(const Tensor& memory, std::span<const std::size_t> prefix) const {
    NoGradGuard guard;
    const Tensor logits = forward(memory, prefix);
    const std::size_t last = logits.rows() - 1;
    std::vector<std::size_t> row{last};
    const Tensor lp = ops::log_softmax_rows(ops::gather_rows(logits, row));
    return {lp.data().begin(), lp.data().end()};
}

GenerationLoss generation_loss(const Tensor& logits, std::span<const std::size_t> targets, std::size_t pad_id) {
    if (targets.size() != logits.rows()) {
        throw ShapeError("generation_loss: " + std::to_string(targets.size()) + " targets for logits " +
                         logits.shape().str());
    }
    std::vector<std::size_t> rows, kept;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] >= logits.cols()) {
            throw Error("generation_loss: target id " + std::to_string(targets[i]) + " outside vocabulary of " +
                        std::to_string(logits.cols()));
        }
        if (targets[i] == pad_id) continue;
        rows.push_back(i);
        kept.push_back(targets[i]);
    }
    if (kept.empty()) throw Error("generation_loss: no non-PAD targets");
    const Tensor selected = kept.size() == targets.size() ? logits : ops::gather_rows(logits, rows);
    GenerationLoss out;
    out.sum = ops::cross_entropy(selected, kept, ops::Reduction::Sum);
    out.tokens = kept.size();
    out.mean = ops::scalar_mul(out.sum, 1.0 / static_cast<double>(kept.size()));
    return out;
}

}  // namespace shgn
