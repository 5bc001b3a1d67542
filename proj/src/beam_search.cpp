#include "shgn/beam_search.hpp"

#include <algorithm>
#include <numeric>

#include "shgn/error.hpp"

namespace shgn {

namespace {

double final_score(const Hypothesis& h, bool length_norm) {
    const double total = std::accumulate(h.log_probs.begin(), h.log_probs.end(), 0.0);
    return length_norm && !h.tokens.empty() ? total / static_cast<double>(h.tokens.size()) : total;
}

std::vector<std::size_t> with_bos(const Hypothesis& h, std::size_t bos) {
    std::vector<std::size_t> prefix{bos};
    prefix.insert(prefix.end(), h.tokens.begin(), h.tokens.end());
    return prefix;
}

GenerationResult finish(std::vector<Hypothesis> done, bool length_norm) {
    for (Hypothesis& h : done) h.score = final_score(h, length_norm);
    std::stable_sort(done.begin(), done.end(), [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
    GenerationResult out;
    if (!done.empty()) {
        out.tokens = done.front().tokens;
        out.log_probs = done.front().log_probs;
        out.score = done.front().score;
    }
    out.beams = std::move(done);
    return out;
}

}  // namespace

GenerationResult beam_search(const StepFunction& step, const BeamOptions& options) {
    if (options.beam_size == 0) throw Error("beam_search: beam size must be at least 1");
    if (options.max_len == 0) throw Error("beam_search: max_len must be at least 1");

    struct Candidate {
        std::size_t parent;
        std::size_t token;
        double log_prob;
        double running;
    };

    std::vector<Hypothesis> alive(1);
    std::vector<double> running(1, 0.0);
    std::vector<Hypothesis> done;
    for (std::size_t t = 0; t < options.max_len && !alive.empty(); ++t) {
        std::vector<Candidate> candidates;
        for (std::size_t b = 0; b < alive.size(); ++b) {
            const auto prefix = with_bos(alive[b], options.bos);
            const std::vector<double> lp = step(prefix);
            for (std::size_t v = 0; v < lp.size(); ++v) candidates.push_back({b, v, lp[v], running[b] + lp[v]});
        }
        const std::size_t keep = std::min(options.beam_size, candidates.size());
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& a, const Candidate& b) {
                             if (a.running != b.running) return a.running > b.running;
                             // Equal sums can hide distinct step scores after rounding.
                             return a.log_prob > b.log_prob;
                         });

        std::vector<Hypothesis> next;
        std::vector<double> next_running;
        for (std::size_t i = 0; i < keep; ++i) {
            const Candidate& c = candidates[i];
            Hypothesis h = alive[c.parent];
            h.tokens.push_back(c.token);
            h.log_probs.push_back(c.log_prob);
            if (c.token == options.eos || t + 1 == options.max_len) {
                done.push_back(std::move(h));
            } else {
                next.push_back(std::move(h));
                next_running.push_back(c.running);
            }
        }
        alive = std::move(next);
        running = std::move(next_running);
    }
    return finish(std::move(done), options.length_norm);
}

GenerationResult greedy_decode(const StepFunction& step, const BeamOptions& options) {
    if (options.max_len == 0) throw Error("greedy_decode: max_len must be at least 1");
    Hypothesis h;
    for (std::size_t t = 0; t < options.max_len; ++t) {
        const std::vector<double> lp = step(with_bos(h, options.bos));
        const auto best = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
        h.tokens.push_back(best);
        h.log_probs.push_back(lp[best]);
        if (best == options.eos) break;
    }
    std::vector<Hypothesis> done{std::move(h)};
    return finish(std::move(done), options.length_norm);
}

}  // namespace shgn
