#include "shgn/vocab.hpp"

#include <algorithm>
#include <map>

#include "shgn/error.hpp"

namespace shgn {

namespace {
const std::vector<std::string> kReserved = {"<pad>", "<bos>", "<eos>", "<unk>"};
}

Vocab::Vocab() : tokens_(kReserved) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
    if (tokens.size() < kReserved.size() || !std::equal(kReserved.begin(), kReserved.end(), tokens.begin())) {
        throw Error("vocabulary must start with the reserved tokens <pad> <bos> <eos> <unk>");
    }
    Vocab v;
    v.tokens_ = tokens;
    v.index_.clear();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!v.index_.emplace(tokens[i], i).second) throw Error("duplicate vocabulary entry '" + tokens[i] + "'");
    }
    return v;
}

Vocab Vocab::build(const std::vector<Story>& training, std::size_t min_freq) {
    std::map<std::string, std::size_t> counts;
    for (const Story& s : training) {
        for (const Tokens& sent : s.context)
            for (const auto& t : sent) ++counts[t];
        for (const auto& t : s.ending) ++counts[t];
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [tok, n] : counts) {
        if (n >= min_freq && std::find(kReserved.begin(), kReserved.end(), tok) == kReserved.end()) kept.emplace_back(tok, n);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens = kReserved;
    for (auto& [tok, n] : kept) tokens.push_back(tok);
    return from_tokens(tokens);
}

std::size_t Vocab::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocab::encode(const Tokens& tokens) const {
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
}

Tokens Vocab::decode(std::span<const std::size_t> ids) const {
    Tokens out;
    for (std::size_t id : ids) {
        if (id == kPad || id == kBos || id == kEos) continue;
        out.push_back(token(id));
    }
    return out;
}

std::string detokenize(const Tokens& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        const bool attach = t.size() == 1 && std::string_view(".,!?;:").find(t[0]) != std::string_view::npos;
        if (!out.empty() && !attach) out.push_back(' ');
        out += t;
    }
    return out;
}

}  // namespace shgn
