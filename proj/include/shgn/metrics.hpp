#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "shgn/corpus.hpp"

namespace shgn {

struct PrfScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct RougeScores {
    PrfScore rouge1, rouge2, rouge_l;
};

// Scores are fractions in [0, 1].
struct EvalReport {
    std::array<double, 4> bleu{};
    RougeScores rouge;
    std::size_t n = 0;

    std::string to_json() const;
    // Fixed-order table with scores multiplied by 100.
    std::string to_table() const;
};

// Zero-match n-gram orders get precision 1e-9 instead of 0.
inline constexpr double kBleuEpsilon = 1e-9;

// Corpus-level BLEU with clipped n-gram counts and the corpus brevity penalty; entry n-1
// is the geometric mean of precisions 1..n.
std::array<double, 4> bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);

// Per-pair ROUGE-1/2 and LCS-based ROUGE-L (beta = 1), averaged over pairs.
RougeScores rouge(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);

// Corpus-level clipped n-gram counts: (matches, hypothesis n-gram total).
std::pair<std::size_t, std::size_t> clipped_ngram_counts(const std::vector<Tokens>& hypotheses,
                                                         const std::vector<Tokens>& references, std::size_t n);
double modified_precision(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, std::size_t n);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

EvalReport evaluate(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);

}  // namespace shgn
