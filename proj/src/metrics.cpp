#include "shgn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "shgn/error.hpp"

namespace shgn {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
    NgramCounts out;
    if (tokens.size() < n) return out;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++out[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    return out;
}

std::size_t clipped_overlap(const NgramCounts& hyp, const NgramCounts& ref) {
    std::size_t total = 0;
    for (const auto& [gram, count] : hyp) {
        auto it = ref.find(gram);
        if (it != ref.end()) total += std::min(count, it->second);
    }
    return total;
}

std::size_t total_count(const NgramCounts& c) {
    std::size_t n = 0;
    for (const auto& [g, k] : c) n += k;
    return n;
}

void check_pairs(const std::vector<Tokens>& hyp, const std::vector<Tokens>& ref) {
    if (hyp.empty()) throw Error("metrics: empty hypothesis set");
    if (hyp.size() != ref.size()) {
        throw Error("metrics: " + std::to_string(hyp.size()) + " hypotheses for " + std::to_string(ref.size()) +
                    " references");
    }
}

PrfScore prf(std::size_t overlap, std::size_t hyp_total, std::size_t ref_total) {
    PrfScore s;
    s.precision = hyp_total ? static_cast<double>(overlap) / static_cast<double>(hyp_total) : 0.0;
    s.recall = ref_total ? static_cast<double>(overlap) / static_cast<double>(ref_total) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

}  // namespace

std::pair<std::size_t, std::size_t> clipped_ngram_counts(const std::vector<Tokens>& hypotheses,
                                                         const std::vector<Tokens>& references, std::size_t n) {
    check_pairs(hypotheses, references);
    std::size_t matches = 0, total = 0;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        const auto h = ngrams(hypotheses[i], n);
        matches += clipped_overlap(h, ngrams(references[i], n));
        total += total_count(h);
    }
    return {matches, total};
}

double modified_precision(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, std::size_t n) {
    const auto [matches, total] = clipped_ngram_counts(hypotheses, references, n);
    return total ? static_cast<double>(matches) / static_cast<double>(total) : 0.0;
}

std::array<double, 4> bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references) {
    check_pairs(hypotheses, references);
    std::array<double, 4> matches{}, totals{};
    double hyp_len = 0.0, ref_len = 0.0;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        hyp_len += static_cast<double>(hypotheses[i].size());
        ref_len += static_cast<double>(references[i].size());
    }
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto [m, t] = clipped_ngram_counts(hypotheses, references, n);
        matches[n - 1] = static_cast<double>(m);
        totals[n - 1] = static_cast<double>(t);
    }
    const double bp = hyp_len == 0.0 ? 0.0 : (hyp_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len));
    std::array<double, 4> out{};
    double log_sum = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
        const double p = matches[n] > 0.0 ? matches[n] / totals[n] : kBleuEpsilon;
        log_sum += std::log(p);
        out[n] = bp * std::exp(log_sum / static_cast<double>(n + 1));
    }
    return out;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeScores rouge(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references) {
    check_pairs(hypotheses, references);
    RougeScores sum;
    auto accumulate = [](PrfScore& acc, const PrfScore& s) {
        acc.precision += s.precision;
        acc.recall += s.recall;
        acc.f1 += s.f1;
    };
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        const Tokens& h = hypotheses[i];
        const Tokens& r = references[i];
        for (std::size_t n = 1; n <= 2; ++n) {
            const auto hg = ngrams(h, n);
            const auto rg = ngrams(r, n);
            accumulate(n == 1 ? sum.rouge1 : sum.rouge2, prf(clipped_overlap(hg, rg), total_count(hg), total_count(rg)));
        }
        accumulate(sum.rouge_l, prf(lcs_length(h, r), h.size(), r.size()));
    }
    const double n = static_cast<double>(hypotheses.size());
    for (PrfScore* s : {&sum.rouge1, &sum.rouge2, &sum.rouge_l}) {
        s->precision /= n;
        s->recall /= n;
        s->f1 /= n;
    }
    return sum;
}

EvalReport evaluate(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references) {
    EvalReport r;
    r.bleu = bleu(hypotheses, references);
    r.rouge = rouge(hypotheses, references);
    r.n = hypotheses.size();
    return r;
}

std::string EvalReport::to_json() const {
    auto prf_json = [](const PrfScore& s) {
        return nlohmann::ordered_json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
    };
    nlohmann::ordered_json j;
    j["n"] = n;
    j["bleu"] = bleu;
    j["rouge"] = {{"rouge1", prf_json(rouge.rouge1)}, {"rouge2", prf_json(rouge.rouge2)}, {"rougeL", prf_json(rouge.rouge_l)}};
    return j.dump(2);
}

std::string EvalReport::to_table() const {
    std::ostringstream os;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-8s %8s\n", "metric", "score");
    os << buf;
    const char* names[] = {"B1", "B2", "B3", "B4"};
    for (std::size_t i = 0; i < 4; ++i) {
        std::snprintf(buf, sizeof(buf), "%-8s %8.2f\n", names[i], bleu[i] * 100.0);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "%-8s %8.2f\n%-8s %8.2f\n%-8s %8.2f\n", "R1", rouge.rouge1.f1 * 100.0, "R2",
                  rouge.rouge2.f1 * 100.0, "RL", rouge.rouge_l.f1 * 100.0);
    os << buf;
    std::snprintf(buf, sizeof(buf), "%-8s %8zu\n", "pairs", n);
    os << buf;
    return os.str();
}

}  // namespace shgn
