#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace shgn {

// Log-probabilities over the vocabulary for the token following `prefix` (BOS first).
using StepFunction = std::function<std::vector<double>(std::span<const std::size_t> prefix)>;

struct Hypothesis {
    std::vector<std::size_t> tokens;  // generated ids, EOS included when emitted; BOS excluded
    std::vector<double> log_probs;    // one per token
    double score = 0.0;               // sum of log_probs, divided by length when normalized
};

struct GenerationResult {
    std::vector<std::size_t> tokens;
    std::vector<double> log_probs;
    double score = 0.0;
    std::vector<Hypothesis> beams;  // all completed hypotheses, best first
};

struct BeamOptions {
    std::size_t beam_size = 5;
    std::size_t max_len = 20;  // cap on generated tokens, EOS included
    bool length_norm = false;
    std::size_t bos = 1;
    std::size_t eos = 2;
};

// Keeps the beam_size best expansions of all live hypotheses at every step; expansions
// ending in EOS (or reaching max_len) complete. Ties break toward earlier beams and
// lower token ids, so beam_size = 1 reproduces greedy_decode exactly.
GenerationResult beam_search(const StepFunction& step, const BeamOptions& options);

// Argmax decoding (lowest id on ties) until EOS or max_len.
GenerationResult greedy_decode(const StepFunction& step, const BeamOptions& options);

}  // namespace shgn
