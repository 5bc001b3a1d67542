#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace shgn {

enum class Sentiment { Negative = 0, Neutral = 1, Positive = 2 };

std::string_view sentiment_name(Sentiment s);
Sentiment parse_sentiment(std::string_view name);

using Tokens = std::vector<std::string>;

// Lowercase, split on whitespace, and detach trailing . , ! ? ; : as separate tokens.
Tokens tokenize(std::string_view text);
std::string case_fold(std::string_view text);
// True for tokens made only of punctuation characters.
bool is_punctuation(std::string_view token);

struct Story {
    std::string id;
    std::vector<std::string> context_text;  // surface form of each context sentence
    std::vector<Tokens> context;
    std::optional<std::string> ending_text;
    Tokens ending;  // empty for inference-only records
    std::optional<Sentiment> sentiment;
    // clue_flags[k][i] marks token i of context sentence k.
    std::optional<std::vector<std::vector<bool>>> clue_flags;

    std::size_t num_sentences() const { return context.size(); }
    bool has_ending() const { return !ending.empty(); }
};

Story make_story(std::string id, std::vector<std::string> context, std::optional<std::string> ending);

std::vector<Story> load_stories(const std::filesystem::path& path);
std::vector<Story> parse_stories(std::string_view jsonl, const std::string& source = "<memory>");
// One JSONL line (no trailing newline) that parse_stories reads back to the same record.
std::string story_to_jsonl(const Story& story);

struct DepTree {
    std::string sentence_id;
    std::vector<std::string> forms;
    std::vector<std::string> upos;
    std::vector<std::size_t> heads;  // 1-based head index per token; 0 = root
    std::vector<std::string> relations;

    std::size_t size() const { return heads.size(); }
    std::size_t root() const;  // 0-based index of the root token
    // Number of arcs touching each token (children plus one for a non-root head arc).
    std::vector<std::size_t> degrees() const;
};

using DepTrees = std::map<std::string, DepTree>;

DepTrees load_dep_trees(const std::filesystem::path& path);
DepTrees parse_dep_trees(std::string_view conllu, const std::string& source = "<memory>");
std::string dep_tree_key(const std::string& story_id, std::size_t sentence_number);

class SentimentLexicon {
public:
    SentimentLexicon() = default;
    explicit SentimentLexicon(std::unordered_map<std::string, double> entries) : entries_(std::move(entries)) {}

    double valence(std::string_view token) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::unordered_map<std::string, double> entries_;
};

SentimentLexicon load_lexicon(const std::filesystem::path& path);

struct KnowledgeEdge {
    std::string head;
    std::string relation;
    std::string tail;

    bool operator==(const KnowledgeEdge&) const = default;
    auto operator<=>(const KnowledgeEdge&) const = default;
};

std::vector<KnowledgeEdge> load_knowledge(const std::filesystem::path& path);
std::vector<KnowledgeEdge> parse_knowledge(std::string_view tsv, const std::string& source = "<memory>");

class EmbeddingTable {
public:
    explicit EmbeddingTable(std::size_t dimension);

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return rows_.size(); }
    // Throws on a wrong-length vector or a key that collides after normalization.
    void insert(std::string_view key, std::vector<double> vector);
    const std::vector<double>* find(std::string_view key) const;

    // Keys are trimmed, lowercased, and have inner whitespace runs collapsed.
    static std::string normalize_key(std::string_view key);

private:
    std::size_t dimension_;
    std::unordered_map<std::string, std::vector<double>> rows_;
};

// Header "N d", then N lines "key v1 ... vd". Keys containing spaces are separated from
// their vector by a tab.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable parse_embeddings(std::string_view text, const std::string& source = "<memory>");

class Stopwords {
public:
    Stopwords() = default;
    explicit Stopwords(std::unordered_set<std::string> words) : words_(std::move(words)) {}

    bool contains(std::string_view token) const { return words_.contains(std::string(token)); }
    // Stopwords and punctuation-only tokens never become word nodes or retrieval triggers.
    bool is_content(std::string_view token) const { return !contains(token) && !is_punctuation(token); }
    std::size_t size() const { return words_.size(); }

    static Stopwords english_default();
    static const std::vector<std::string_view>& english_default_list();

private:
    std::unordered_set<std::string> words_;
};

Stopwords load_stopwords(const std::filesystem::path& path);

}  // namespace shgn
