#include "shgn/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "shgn/error.hpp"

namespace shgn {

namespace {

using json = nlohmann::json;

constexpr std::string_view kTerminalPunct = ".,!?;:";

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Splits on '\n' and strips a trailing '\r'.
std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (end == text.size()) break;
        start = end + 1;
    }
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = s.find(sep, start);
        if (end == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, end - start));
        start = end + 1;
    }
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        const std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

bool parse_size(std::string_view s, std::size_t& out) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end && !s.empty();
}

bool parse_double(std::string_view s, double& out) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end && !s.empty();
}

}  // namespace

std::string_view sentiment_name(Sentiment s) {
    switch (s) {
        case Sentiment::Negative: return "negative";
        case Sentiment::Neutral: return "neutral";
        case Sentiment::Positive: return "positive";
    }
    return "neutral";
}

Sentiment parse_sentiment(std::string_view name) {
    const std::string folded = case_fold(name);
    if (folded == "negative") return Sentiment::Negative;
    if (folded == "neutral") return Sentiment::Neutral;
    if (folded == "positive") return Sentiment::Positive;
    throw Error("unknown sentiment label '" + std::string(name) + "'");
}

std::string case_fold(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_punctuation(std::string_view token) {
    return !token.empty() &&
           std::all_of(token.begin(), token.end(), [](char c) { return std::ispunct(static_cast<unsigned char>(c)); });
}

Tokens tokenize(std::string_view text) {
    Tokens out;
    for (std::string_view chunk : split_ws(text)) {
        std::vector<std::string> trailing;
        while (!chunk.empty() && kTerminalPunct.find(chunk.back()) != std::string_view::npos) {
            trailing.emplace_back(1, chunk.back());
            chunk.remove_suffix(1);
        }
        if (!chunk.empty()) out.push_back(case_fold(chunk));
        out.insert(out.end(), trailing.rbegin(), trailing.rend());
    }
    return out;
}

Story make_story(std::string id, std::vector<std::string> context, std::optional<std::string> ending) {
    if (context.empty()) throw Error("story '" + id + "': context is empty");
    Story story;
    story.id = std::move(id);
    for (auto& sentence : context) {
        Tokens tokens = tokenize(sentence);
        if (tokens.empty()) throw Error("story '" + story.id + "': empty context sentence");
        story.context.push_back(std::move(tokens));
        story.context_text.push_back(std::string(trim(sentence)));
    }
    if (ending) {
        story.ending = tokenize(*ending);
        if (story.ending.empty()) throw Error("story '" + story.id + "': empty ending");
        story.ending_text = std::string(trim(*ending));
    }
    return story;
}

std::vector<Story> parse_stories(std::string_view jsonl, const std::string& source) {
    std::vector<Story> stories;
    const auto lines = split_lines(jsonl);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        if (is_blank(lines[i])) continue;
        json rec;
        try {
            rec = json::parse(lines[i]);
        } catch (const json::parse_error& e) {
            throw ParseError(source, lineno, std::string("malformed JSON: ") + e.what());
        }
        try {
            if (!rec.is_object()) throw Error("record is not an object");
            if (!rec.contains("id") || !rec["id"].is_string()) throw Error("missing string field 'id'");
            if (!rec.contains("context") || !rec["context"].is_array()) throw Error("missing array field 'context'");
            std::vector<std::string> context;
            for (const auto& s : rec["context"]) {
                if (!s.is_string()) throw Error("context entries must be strings");
                context.push_back(s.get<std::string>());
            }
            if (context.empty()) throw Error("context array is empty");
            std::optional<std::string> ending;
            if (rec.contains("ending") && !rec["ending"].is_null()) {
                if (!rec["ending"].is_string()) throw Error("'ending' must be a string");
                ending = rec["ending"].get<std::string>();
            }
            Story story = make_story(rec["id"].get<std::string>(), std::move(context), std::move(ending));
            if (rec.contains("sentiment") && !rec["sentiment"].is_null()) {
                story.sentiment = parse_sentiment(rec["sentiment"].get<std::string>());
            }
            stories.push_back(std::move(story));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    return stories;
}

std::vector<Story> load_stories(const std::filesystem::path& path) {
    return parse_stories(read_file(path), path.string());
}

std::string story_to_jsonl(const Story& story) {
    json rec;
    rec["id"] = story.id;
    rec["context"] = story.context_text;
    if (story.ending_text) rec["ending"] = *story.ending_text;
    if (story.sentiment) rec["sentiment"] = std::string(sentiment_name(*story.sentiment));
    return rec.dump();
}

std::size_t DepTree::root() const {
    for (std::size_t i = 0; i < heads.size(); ++i)
        if (heads[i] == 0) return i;
    throw Error("dependency tree '" + sentence_id + "' has no root");
}

std::vector<std::size_t> DepTree::degrees() const {
    std::vector<std::size_t> deg(heads.size(), 0);
    for (std::size_t i = 0; i < heads.size(); ++i) {
        if (heads[i] == 0) continue;
        ++deg[i];
        ++deg[heads[i] - 1];
    }
    return deg;
}

std::string dep_tree_key(const std::string& story_id, std::size_t sentence_number) {
    return story_id + "." + std::to_string(sentence_number);
}

DepTrees parse_dep_trees(std::string_view conllu, const std::string& source) {
    DepTrees trees;
    const auto lines = split_lines(conllu);
    std::size_t block_start = 0;
    std::size_t block_number = 0;
    std::optional<std::string> sent_id;
    DepTree tree;

    auto finish_block = [&](std::size_t end_line) {
        if (tree.heads.empty() && !sent_id) return;
        ++block_number;
        const std::string where = "sentence block " + std::to_string(block_number);
        if (!sent_id) throw ParseError(source, block_start, where + " has no '# sent_id' comment");
        if (tree.heads.empty()) throw ParseError(source, block_start, where + " ('" + *sent_id + "') has no tokens");
        const std::size_t n = tree.heads.size();
        std::size_t roots = 0;
        for (std::size_t h : tree.heads) {
            if (h > n) throw ParseError(source, block_start, where + ": head index " + std::to_string(h) + " out of range");
            if (h == 0) ++roots;
        }
        if (roots != 1) {
            throw ParseError(source, block_start, where + ": expected exactly one root, found " + std::to_string(roots));
        }
        // Every token must reach the root within n steps; otherwise its head chain cycles.
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t cur = i + 1, steps = 0;
            while (cur != 0 && steps <= n) {
                cur = tree.heads[cur - 1];
                ++steps;
            }
            if (cur != 0) throw ParseError(source, block_start, where + ": cyclic heads at token " + std::to_string(i + 1));
        }
        tree.sentence_id = *sent_id;
        if (trees.contains(tree.sentence_id)) {
            throw ParseError(source, block_start, where + ": duplicate sent_id '" + tree.sentence_id + "'");
        }
        trees.emplace(tree.sentence_id, std::move(tree));
        tree = DepTree{};
        sent_id.reset();
        (void)end_line;
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        std::string_view line = lines[i];
        if (is_blank(line)) {
            finish_block(lineno);
            block_start = 0;
            continue;
        }
        if (block_start == 0) block_start = lineno;
        if (line.front() == '#') {
            std::string_view body = trim(line.substr(1));
            if (body.starts_with("sent_id")) {
                body.remove_prefix(7);
                body = trim(body);
                if (!body.empty() && body.front() == '=') body = trim(body.substr(1));
                sent_id = std::string(body);
            }
            continue;
        }
        const auto cols = split(line, '\t');
        if (cols.size() != 10) {
            throw ParseError(source, lineno, "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
        }
        if (cols[0].find('-') != std::string_view::npos || cols[0].find('.') != std::string_view::npos) continue;
        std::size_t id = 0, head = 0;
        if (!parse_size(cols[0], id)) throw ParseError(source, lineno, "bad token id '" + std::string(cols[0]) + "'");
        if (id != tree.heads.size() + 1) throw ParseError(source, lineno, "token ids must be consecutive from 1");
        if (!parse_size(cols[6], head)) throw ParseError(source, lineno, "bad head '" + std::string(cols[6]) + "'");
        tree.forms.push_back(case_fold(cols[1]));
        tree.upos.emplace_back(cols[3]);
        tree.heads.push_back(head);
        tree.relations.emplace_back(cols[7]);
    }
    finish_block(lines.size() + 1);
    return trees;
}

DepTrees load_dep_trees(const std::filesystem::path& path) {
    return parse_dep_trees(read_file(path), path.string());
}

double SentimentLexicon::valence(std::string_view token) const {
    auto it = entries_.find(std::string(token));
    return it == entries_.end() ? 0.0 : it->second;
}

SentimentLexicon load_lexicon(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    std::unordered_map<std::string, double> entries;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_blank(lines[i]) || lines[i].front() == '#') continue;
        const auto cols = split(lines[i], '\t');
        double v = 0.0;
        if (cols.size() < 2 || !parse_double(trim(cols[1]), v)) {
            throw ParseError(path.string(), i + 1, "expected token<TAB>valence");
        }
        entries[case_fold(trim(cols[0]))] = v;
    }
    return SentimentLexicon(std::move(entries));
}

std::vector<KnowledgeEdge> parse_knowledge(std::string_view tsv, const std::string& source) {
    std::vector<KnowledgeEdge> edges;
    std::set<KnowledgeEdge> seen;
    const auto lines = split_lines(tsv);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        if (is_blank(lines[i])) continue;
        const auto cols = split(lines[i], '\t');
        if (cols.size() != 3) {
            throw ParseError(source, lineno, "expected 3 tab-separated columns, found " + std::to_string(cols.size()));
        }
        KnowledgeEdge e{case_fold(trim(cols[0])), std::string(trim(cols[1])), case_fold(trim(cols[2]))};
        if (e.head.empty() || e.relation.empty() || e.tail.empty()) throw ParseError(source, lineno, "empty field");
        if (e.head == e.tail) throw ParseError(source, lineno, "head and tail are the same concept '" + e.head + "'");
        e.relation = case_fold(e.relation);
        if (seen.insert(e).second) edges.push_back(std::move(e));
    }
    return edges;
}

std::vector<KnowledgeEdge> load_knowledge(const std::filesystem::path& path) {
    return parse_knowledge(read_file(path), path.string());
}

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw Error("embedding dimension must be positive");
}

std::string EmbeddingTable::normalize_key(std::string_view key) {
    std::string out;
    for (std::string_view part : split_ws(key)) {
        if (!out.empty()) out.push_back(' ');
        out += case_fold(part);
    }
    return out;
}

void EmbeddingTable::insert(std::string_view key, std::vector<double> vector) {
    if (vector.size() != dimension_) {
        throw Error("embedding '" + std::string(key) + "' has " + std::to_string(vector.size()) + " values, expected " +
                    std::to_string(dimension_));
    }
    std::string norm = normalize_key(key);
    if (norm.empty()) throw Error("empty embedding key");
    if (!rows_.emplace(norm, std::move(vector)).second) throw Error("duplicate embedding key '" + norm + "'");
}

const std::vector<double>* EmbeddingTable::find(std::string_view key) const {
    auto it = rows_.find(normalize_key(key));
    return it == rows_.end() ? nullptr : &it->second;
}

EmbeddingTable parse_embeddings(std::string_view text, const std::string& source) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw ParseError(source, 1, "missing header 'N d'");
    const auto header = split_ws(lines[0]);
    std::size_t n = 0, d = 0;
    if (header.size() != 2 || !parse_size(header[0], n) || !parse_size(header[1], d) || d == 0) {
        throw ParseError(source, 1, "header must be 'N d' with d > 0");
    }
    EmbeddingTable table(d);
    std::size_t count = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        if (is_blank(lines[i])) continue;
        // A tab separates multi-word keys from the vector; otherwise the key is the first field.
        std::string_view key, rest;
        if (const auto tab = lines[i].find('\t'); tab != std::string_view::npos) {
            key = trim(lines[i].substr(0, tab));
            rest = lines[i].substr(tab + 1);
        } else {
            const auto fields = split_ws(lines[i]);
            key = fields.front();
            rest = lines[i].substr(static_cast<std::size_t>(key.data() - lines[i].data()) + key.size());
        }
        std::vector<double> vec;
        for (std::string_view f : split_ws(rest)) {
            double v = 0.0;
            if (!parse_double(f, v)) {
                throw ParseError(source, lineno, "embedding '" + std::string(key) + "': bad value '" + std::string(f) + "'");
            }
            vec.push_back(v);
        }
        try {
            table.insert(key, std::move(vec));
        } catch (const Error& e) {
            throw ParseError(source, lineno, e.what());
        }
        ++count;
    }
    if (count != n) {
        throw ParseError(source, 1, "header declares " + std::to_string(n) + " vectors, found " + std::to_string(count));
    }
    return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    return parse_embeddings(read_file(path), path.string());
}

const std::vector<std::string_view>& Stopwords::english_default_list() {
    static const std::vector<std::string_view> words = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
        "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
        "between", "both", "but", "by", "can", "could", "did", "do", "does", "doing",
        "down", "during", "each", "few", "for", "from", "further", "had", "has", "have",
        "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how",
        "i", "if", "in", "into", "is", "it", "its", "itself", "just", "me",
        "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off",
        "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over",
        "own", "same", "she", "should", "so", "some", "such", "than", "that", "the",
        "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those",
        "through", "to", "too", "under", "until", "up", "very", "was", "we", "were",
        "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with",
        "would", "you", "your", "yours", "yourself", "yourselves", "also", "across", "although", "though",
        "even", "ever", "every", "however", "whose", "may", "might", "must", "never", "without",
        "onto", "really", "shall", "still", "upon", "us", "within", "yet", "'s", "n't",
    };
    return words;
}

Stopwords Stopwords::english_default() {
    std::unordered_set<std::string> set;
    for (auto w : english_default_list()) set.emplace(w);
    return Stopwords(std::move(set));
}

Stopwords load_stopwords(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    std::unordered_set<std::string> set;
    for (std::string_view line : split_lines(text)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        set.insert(case_fold(line));
    }
    return Stopwords(std::move(set));
}

}  // namespace shgn
