#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mkge/types.hpp"

namespace mkge {

// One language's graph: vocabularies in first-appearance order plus the
// deduplicated, index-encoded triple set. Immutable after loading; safe for
// concurrent readers.
struct KnowledgeGraph {
    LanguageId language;
    std::vector<std::string> entities;
    std::vector<std::string> relations;
    std::vector<Triple> triples;
    std::size_t duplicates_dropped = 0;

    std::unordered_map<std::string, std::uint32_t> entity_index;
    std::unordered_map<std::string, std::uint32_t> relation_index;

    std::optional<std::uint32_t> find_entity(const std::string& s) const {
        auto it = entity_index.find(s);
        if (it == entity_index.end()) return std::nullopt;
        return it->second;
    }

    std::optional<std::uint32_t> find_relation(const std::string& s) const {
        auto it = relation_index.find(s);
        if (it == relation_index.end()) return std::nullopt;
        return it->second;
    }
};

// Aligned triple pairs for one unordered language pair, stored in canonical
// direction (pair.first.code < pair.second.code).
struct AlignmentSet {
    LangPair pair;
    std::vector<TriplePair> pairs;
    std::size_t duplicates_dropped = 0;
};

// Gold entity links for evaluation, directional. Lines whose surface strings
// do not resolve are skipped, not fatal: the link source is external to the
// graphs and coverage gaps are expected.
struct IllSet {
    LanguageId source;
    LanguageId target;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> links;
    std::size_t skipped_unresolved = 0;
    std::size_t skipped_duplicate_source = 0;
};

struct MultilingualKB {
    std::map<LanguageId, KnowledgeGraph> graphs;
    std::map<LangPair, AlignmentSet> alignments;
    std::vector<IllSet> ills;

    const KnowledgeGraph& graph(const LanguageId& lang) const {
        auto it = graphs.find(lang);
        if (it == graphs.end())
            throw Error("unknown language: " + lang.code);
        return it->second;
    }

    void add_graph(KnowledgeGraph g) {
        if (graphs.count(g.language))
            throw ConfigError("duplicate language: " + g.language.code);
        graphs.emplace(g.language, std::move(g));
    }

    void add_alignment(AlignmentSet a) {
        if (!graphs.count(a.pair.first) || !graphs.count(a.pair.second))
            throw ConfigError("alignment references unknown language");
        alignments[a.pair] = std::move(a);
    }

    void add_ills(IllSet s) {
        if (!graphs.count(s.source) || !graphs.count(s.target))
            throw ConfigError("ILL set references unknown language");
        ills.push_back(std::move(s));
    }
};

namespace detail {

// Splits file content into lines on '\n'. Only the line terminator itself is
// stripped; all other bytes (including '\r') are kept, so comparisons stay
// byte-exact.
inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string content = buf.str();

    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string::npos) {
            if (start < content.size()) lines.push_back(content.substr(start));
            break;
        }
        lines.push_back(content.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

struct TripleKey {
    bool operator()(const Triple& a, const Triple& b) const { return a < b; }
};

}  // namespace detail

// Reads `head<TAB>relation<TAB>tail` lines. Vocabulary ids follow first
// appearance (head, relation, tail within each line, lines in file order);
// duplicate triples are dropped and counted. Blank lines are ignored.
inline KnowledgeGraph load_graph(const std::string& path, LanguageId language) {
    if (!valid_language_code(language.code))
        throw ConfigError("invalid language code: '" + language.code + "'");

    KnowledgeGraph g;
    g.language = std::move(language);

    auto intern = [](std::vector<std::string>& vocab,
                     std::unordered_map<std::string, std::uint32_t>& index,
                     const std::string& s) -> std::uint32_t {
        auto it = index.find(s);
        if (it != index.end()) return it->second;
        const auto id = static_cast<std::uint32_t>(vocab.size());
        vocab.push_back(s);
        index.emplace(s, id);
        return id;
    };

    std::set<Triple> seen;
    const auto lines = detail::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        if (fields.size() != 3)
            throw ParseError(path, i + 1,
                             "expected 3 tab-separated fields, got " +
                                 std::to_string(fields.size()));
        Triple t;
        t.head = intern(g.entities, g.entity_index, fields[0]);
        t.relation = intern(g.relations, g.relation_index, fields[1]);
        t.tail = intern(g.entities, g.entity_index, fields[2]);
        if (seen.insert(t).second) {
            g.triples.push_back(t);
        } else {
            ++g.duplicates_dropped;
        }
    }

    if (g.triples.empty())
        throw Error("empty graph file: " + path);
    return g;
}

// Writes a graph back to the triple format; reloading the output reproduces
// the graph exactly (vocabulary order included).
inline void write_graph(const KnowledgeGraph& g, std::ostream& out) {
    for (const Triple& t : g.triples) {
        out << g.entities[t.head] << '\t' << g.relations[t.relation] << '\t'
            << g.entities[t.tail] << '\n';
    }
}

// Reads 6-field lines: a triple in `pair.first`'s language followed by its
// counterpart in `pair.second`'s. The stored set is canonicalized, so the
// call may pass the pair in either order as long as the file matches it.
inline AlignmentSet load_alignment(const std::string& path, const LangPair& given,
                                   const MultilingualKB& kb) {
    if (given.first == given.second)
        throw ConfigError("alignment pair must name two distinct languages");
    const KnowledgeGraph& first_graph = kb.graph(given.first);
    const KnowledgeGraph& second_graph = kb.graph(given.second);
    const bool is_canonical = given.first.code < given.second.code;

    AlignmentSet set;
    set.pair = canonical_pair(given.first, given.second);

    auto resolve_entity = [&](const KnowledgeGraph& g, const std::string& s,
                              std::size_t line) -> std::uint32_t {
        if (auto id = g.find_entity(s)) return *id;
        throw ResolutionError(path, line, s,
                              "entity not in " + g.language.code + " vocabulary");
    };
    auto resolve_relation = [&](const KnowledgeGraph& g, const std::string& s,
                                std::size_t line) -> std::uint32_t {
        if (auto id = g.find_relation(s)) return *id;
        throw ResolutionError(path, line, s,
                              "relation not in " + g.language.code + " vocabulary");
    };

    std::set<TriplePair> seen;
    const auto lines = detail::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        if (fields.size() != 6)
            throw ParseError(path, i + 1,
                             "expected 6 tab-separated fields, got " +
                                 std::to_string(fields.size()));
        Triple a{resolve_entity(first_graph, fields[0], i + 1),
                 resolve_relation(first_graph, fields[1], i + 1),
                 resolve_entity(first_graph, fields[2], i + 1)};
        Triple b{resolve_entity(second_graph, fields[3], i + 1),
                 resolve_relation(second_graph, fields[4], i + 1),
                 resolve_entity(second_graph, fields[5], i + 1)};
        TriplePair p = is_canonical ? TriplePair{a, b} : TriplePair{b, a};
        if (seen.insert(p).second) {
            set.pairs.push_back(p);
        } else {
            ++set.duplicates_dropped;
        }
    }
    return set;
}

// Reads `source_entity<TAB>target_entity` lines. Unresolvable lines and
// repeated source entities are skipped and counted.
inline IllSet load_ills(const std::string& path, const LanguageId& source,
                        const LanguageId& target, const MultilingualKB& kb) {
    const KnowledgeGraph& src = kb.graph(source);
    const KnowledgeGraph& tgt = kb.graph(target);

    IllSet set;
    set.source = source;
    set.target = target;

    std::set<std::uint32_t> seen_sources;
    const auto lines = detail::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        if (fields.size() != 2)
            throw ParseError(path, i + 1,
                             "expected 2 tab-separated fields, got " +
                                 std::to_string(fields.size()));
        const auto s = src.find_entity(fields[0]);
        const auto t = tgt.find_entity(fields[1]);
        if (!s || !t) {
            ++set.skipped_unresolved;
            continue;
        }
        if (!seen_sources.insert(*s).second) {
            ++set.skipped_duplicate_source;
            continue;
        }
        set.links.emplace_back(*s, *t);
    }
    return set;
}

// Triples resolved against an existing vocabulary (evaluation inputs such as
// held-out test splits). Unresolvable lines are skipped and counted.
struct ResolvedTriples {
    std::vector<Triple> triples;
    std::size_t skipped = 0;
};

inline ResolvedTriples resolve_triples(const std::string& path,
                                       const KnowledgeGraph& g) {
    ResolvedTriples out;
    const auto lines = detail::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        if (fields.size() != 3)
            throw ParseError(path, i + 1,
                             "expected 3 tab-separated fields, got " +
                                 std::to_string(fields.size()));
        const auto h = g.find_entity(fields[0]);
        const auto r = g.find_relation(fields[1]);
        const auto t = g.find_entity(fields[2]);
        if (!h || !r || !t) {
            ++out.skipped;
            continue;
        }
        out.triples.push_back(Triple{*h, *r, *t});
    }
    return out;
}

struct GraphStats {
    LanguageId language;
    std::size_t entities = 0;
    std::size_t relations = 0;
    std::size_t triples = 0;
};

struct AlignmentStats {
    LangPair pair;
    std::size_t aligned_pairs = 0;
};

struct IllStats {
    LanguageId source;
    LanguageId target;
    std::size_t links = 0;
};

struct KbStats {
    std::vector<GraphStats> graphs;
    std::vector<AlignmentStats> alignments;
    std::vector<IllStats> ills;
};

inline KbStats graph_stats(const MultilingualKB& kb) {
    KbStats stats;
    for (const auto& [lang, g] : kb.graphs)
        stats.graphs.push_back(
            {lang, g.entities.size(), g.relations.size(), g.triples.size()});
    for (const auto& [pair, set] : kb.alignments)
        stats.alignments.push_back({pair, set.pairs.size()});
    for (const IllSet& s : kb.ills)
        stats.ills.push_back({s.source, s.target, s.links.size()});
    return stats;
}

inline void write_stats(const KbStats& stats, std::ostream& out) {
    for (const auto& g : stats.graphs)
        out << "LANG\t" << g.language.code << '\t' << g.entities << '\t'
            << g.relations << '\t' << g.triples << '\n';
    for (const auto& a : stats.alignments)
        out << "ALIGN\t" << a.pair.first.code << '\t' << a.pair.second.code
            << '\t' << a.aligned_pairs << '\n';
    for (const auto& s : stats.ills)
        out << "ILL\t" << s.source.code << '\t' << s.target.code << '\t'
            << s.links << '\n';
}

}  // namespace mkge
