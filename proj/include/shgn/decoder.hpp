#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shgn/ops.hpp"
#include "shgn/params.hpp"

namespace shgn {

struct DecoderConfig {
    std::size_t dim = 64;
    std::size_t heads = 4;
    std::size_t layers = 2;
    std::size_t ffn_dim = 0;  // 0 selects 4 * dim
    std::size_t max_positions = 64;
};

// Attention maps captured during a forward pass: [layer][head] -> [T x T] or [T x N].
struct AttentionTrace {
    std::vector<std::vector<Tensor>> self;
    std::vector<std::vector<Tensor>> cross;
};

// Pre-norm transformer decoder: each block runs masked self-attention, cross-attention
// over the node states and a ReLU feed-forward layer, each wrapped in a residual with
// layer norm on the block input. A final layer norm feeds the untied output projection.
class TransformerDecoder {
public:
    TransformerDecoder(const DecoderConfig& config, std::size_t vocab_size, ParamStore& params, Rng& rng);

    const DecoderConfig& config() const { return config_; }
    std::size_t vocab_size() const { return vocab_size_; }

    // Teacher-forced logits [T x V] for input ids (BOS-prefixed) attending over memory [N x d].
    Tensor forward(const Tensor& memory, std::span<const std::size_t> input_ids, AttentionTrace* trace = nullptr) const;

    // Log-probabilities of the next token after `prefix`, computed without recording gradients.
    std::vector<double> next_log_probs(const Tensor& memory, std::span<const std::size_t> prefix) const;

private:
    struct Attention {
        Tensor wq, wk, wv, wo, bq, bk, bv, bo;
    };
    struct Block {
        Attention self, cross;
        Tensor ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
        Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    };

    Attention make_attention(const std::string& prefix, ParamStore& params, Rng& rng) const;
    Tensor attend(const Attention& a, const Tensor& queries, const Tensor& keys_values, bool causal,
                  std::vector<Tensor>* trace) const;

    DecoderConfig config_;
    std::size_t vocab_size_;
    Tensor embedding_;
    Tensor positions_;  // constant sinusoidal table [max_positions x d]
    std::vector<Block> blocks_;
    Tensor lnf_g_, lnf_b_;
    Tensor output_;
};

// Sinusoidal position table: pe[p, 2i] = sin(p / 10000^(2i/d)), pe[p, 2i+1] = cos(...).
std::vector<double> sinusoidal_positions(std::size_t positions, std::size_t dim);

struct GenerationLoss {
    Tensor sum;   // -sum_t log P(target_t)
    Tensor mean;  // sum / number of non-PAD targets
    std::size_t tokens = 0;
};

// Cross-entropy of logits [T x V] against targets (gold shifted left, EOS-terminated).
// Positions whose target is `pad_id` are skipped.
GenerationLoss generation_loss(const Tensor& logits, std::span<const std::size_t> targets, std::size_t pad_id = 0);

}  // namespace shgn
