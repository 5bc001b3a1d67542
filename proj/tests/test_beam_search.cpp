#include <doctest.h>

#include <cmath>
#include <limits>

#include "shgn/beam_search.hpp"
#include "shgn/error.hpp"
#include "shgn/rng.hpp"

using namespace shgn;

namespace {

constexpr std::size_t kV = 4;
constexpr std::size_t kBos = 0;
constexpr std::size_t kEos = 3;

// First-order Markov table: log P(next | last) for last in [0, V).
struct MarkovModel {
    std::vector<std::vector<double>> table;

    static MarkovModel random(Rng& rng) {
        MarkovModel m;
        for (std::size_t a = 0; a < kV; ++a) {
            std::vector<double> row(kV);
            double z = 0.0;
            for (double& p : row) z += p = 0.05 + rng.uniform();
            for (double& p : row) p = std::log(p / z);
            m.table.push_back(row);
        }
        return m;
    }

    StepFunction step() const {
        return [this](std::span<const std::size_t> prefix) { return table[prefix.back()]; };
    }
};

struct Best {
    double score = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> tokens;
};

// Enumerates every sequence that ends in EOS or reaches max_len.
void enumerate(const MarkovModel& m, std::size_t max_len, bool norm, std::vector<std::size_t>& seq, double sum,
               Best& best) {
    const std::size_t last = seq.empty() ? kBos : seq.back();
    for (std::size_t v = 0; v < kV; ++v) {
        seq.push_back(v);
        const double s = sum + m.table[last][v];
        if (v == kEos || seq.size() == max_len) {
            const double score = norm ? s / static_cast<double>(seq.size()) : s;
            if (score > best.score) best = {score, seq};
        } else {
            enumerate(m, max_len, norm, seq, s, best);
        }
        seq.pop_back();
    }
}

BeamOptions options(std::size_t beam, std::size_t max_len = 3, bool norm = false) {
    BeamOptions o;
    o.beam_size = beam;
    o.max_len = max_len;
    o.length_norm = norm;
    o.bos = kBos;
    o.eos = kEos;
    return o;
}

}  // namespace

TEST_CASE("full-width beam recovers the exhaustive optimum") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const MarkovModel m = MarkovModel::random(rng);
        for (bool norm : {false, true}) {
            Best best;
            std::vector<std::size_t> seq;
            enumerate(m, 3, norm, seq, 0.0, best);
            const GenerationResult r = beam_search(m.step(), options(kV * kV * kV, 3, norm));
            CHECK(r.score == doctest::Approx(best.score).epsilon(1e-12));
            CHECK(r.tokens == best.tokens);
            // No pruning happens, so every complete sequence is returned.
            if (!norm) CHECK(r.beams.size() == 1 + (kV - 1) + (kV - 1) * (kV - 1) * kV);
        }
    }
}

TEST_CASE("hand-checked Markov toy with beam 2") {
    // From BOS: token 1 is likelier than 2, but 2 leads to EOS with certainty.
    MarkovModel m;
    const double lo = -1e9;
    m.table = {
        {lo, std::log(0.6), std::log(0.4), lo},
        {lo, std::log(0.5), std::log(0.2), std::log(0.3)},
        {lo, lo, lo, 0.0},
        {lo, lo, lo, 0.0},
    };
    const GenerationResult g = greedy_decode(m.step(), options(1));
    CHECK(g.tokens == std::vector<std::size_t>{1, 1, 1});
    const GenerationResult b = beam_search(m.step(), options(2));
    CHECK(b.tokens == std::vector<std::size_t>{2, 3});
    CHECK(b.score == doctest::Approx(std::log(0.4)));
    Best best;
    std::vector<std::size_t> seq;
    enumerate(m, 3, false, seq, 0.0, best);
    CHECK(b.tokens == best.tokens);
}

TEST_CASE("beam size one equals greedy") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const MarkovModel m = MarkovModel::random(rng);
        const std::size_t max_len = 1 + rng.below(6);
        const GenerationResult g = greedy_decode(m.step(), options(1, max_len));
        const GenerationResult b = beam_search(m.step(), options(1, max_len));
        CHECK(g.tokens == b.tokens);
        CHECK(g.log_probs == b.log_probs);
        CHECK(g.score == b.score);
    }
}

TEST_CASE("no beam width beats the full-width search") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const MarkovModel m = MarkovModel::random(rng);
        const double full = beam_search(m.step(), options(64)).score;
        for (std::size_t k = 1; k <= 8; ++k) {
            const double s = beam_search(m.step(), options(k)).score;
            CHECK(s <= full + 1e-12);
        }
    }
}

TEST_CASE("beam results are sorted and self-consistent") {
    Rng rng(14);
    const MarkovModel m = MarkovModel::random(rng);
    const GenerationResult r = beam_search(m.step(), options(3, 5, true));
    REQUIRE_FALSE(r.beams.empty());
    for (std::size_t i = 1; i < r.beams.size(); ++i) CHECK(r.beams[i - 1].score >= r.beams[i].score);
    for (const Hypothesis& h : r.beams) {
        CHECK(h.tokens.size() == h.log_probs.size());
        CHECK((h.tokens.back() == kEos || h.tokens.size() == 5));
        double s = 0.0;
        std::size_t last = kBos;
        for (std::size_t i = 0; i < h.tokens.size(); ++i) {
            CHECK(h.log_probs[i] == m.table[last][h.tokens[i]]);
            s += h.log_probs[i];
            last = h.tokens[i];
        }
        CHECK(h.score == doctest::Approx(s / static_cast<double>(h.tokens.size())));
    }
}

TEST_CASE("beam option validation") {
    Rng rng(15);
    const MarkovModel m = MarkovModel::random(rng);
    CHECK_THROWS_AS(beam_search(m.step(), options(0)), Error);
    CHECK_THROWS_AS(beam_search(m.step(), options(2, 0)), Error);
    CHECK_THROWS_AS(greedy_decode(m.step(), options(1, 0)), Error);
}
