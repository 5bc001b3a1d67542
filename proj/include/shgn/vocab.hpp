#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "shgn/corpus.hpp"

namespace shgn {

class Vocab {
public:
    static constexpr std::size_t kPad = 0;
    static constexpr std::size_t kBos = 1;
    static constexpr std::size_t kEos = 2;
    static constexpr std::size_t kUnk = 3;

    Vocab();
    // Tokens (context and ending) seen at least min_freq times in the training split,
    // ordered by descending frequency then lexicographically.
    static Vocab build(const std::vector<Story>& training, std::size_t min_freq = 2);
    static Vocab from_tokens(const std::vector<std::string>& tokens);

    std::size_t size() const { return tokens_.size(); }
    std::size_t id(std::string_view token) const;  // kUnk when absent
    const std::string& token(std::size_t id) const { return tokens_.at(id); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    std::vector<std::size_t> encode(const Tokens& tokens) const;
    // Drops PAD/BOS/EOS.
    Tokens decode(std::span<const std::size_t> ids) const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Joins tokens with spaces, attaching detached punctuation to the preceding word.
std::string detokenize(const Tokens& tokens);

}  // namespace shgn
