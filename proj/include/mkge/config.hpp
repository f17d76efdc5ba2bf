#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "mkge/kg.hpp"
#include "mkge/rng.hpp"
#include "mkge/trainer.hpp"
#include "mkge/twa.hpp"
#include "mkge/types.hpp"

namespace mkge {

// A full run description parsed from a tab-separated config file. Lines are
// `key<TAB>field...`; list keys (language, alignment, ills) repeat, scalar
// keys may appear once.
struct LanguageSpec {
    LanguageId language;
    std::string path;
};

struct AlignmentSpec {
    LanguageId first;
    LanguageId second;
    std::string path;
};

struct IllSpec {
    LanguageId source;
    LanguageId target;
    std::string path;
};

struct RunConfig {
    std::vector<LanguageSpec> languages;
    std::vector<AlignmentSpec> alignments;
    std::vector<IllSpec> ills;
    TrainConfig train;
    std::string output_dir;
    // Fraction of every alignment set withheld from training and reserved
    // as verification positives.
    double twa_holdout = 0.0;
};

namespace detail {

inline std::uint64_t parse_u64(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a valid integer: '" +
                          s + "'");
    }
}

inline double parse_real(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a valid number: '" +
                          s + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" +
                      s + "'");
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& path) {
    RunConfig cfg;
    std::set<std::string> seen_scalars;

    auto scalar_once = [&](const std::string& key) {
        if (!seen_scalars.insert(key).second)
            throw ConfigError("config key '" + key + "' given more than once");
    };

    const auto lines = detail::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        const auto fields = detail::split_tabs(line);
        const std::string& key = fields[0];
        const std::size_t values = fields.size() - 1;

        auto want = [&](std::size_t n) {
            if (values != n)
                throw ParseError(path, i + 1,
                                 "key '" + key + "' expects " +
                                     std::to_string(n) + " fields, got " +
                                     std::to_string(values));
        };

        if (key == "language") {
            want(2);
            if (!valid_language_code(fields[1]))
                throw ParseError(path, i + 1,
                                 "invalid language code: '" + fields[1] + "'");
            cfg.languages.push_back({LanguageId{fields[1]}, fields[2]});
        } else if (key == "alignment") {
            want(3);
            cfg.alignments.push_back(
                {LanguageId{fields[1]}, LanguageId{fields[2]}, fields[3]});
        } else if (key == "ills") {
            want(3);
            cfg.ills.push_back(
                {LanguageId{fields[1]}, LanguageId{fields[2]}, fields[3]});
        } else if (key == "variant") {
            want(1);
            scalar_once(key);
            cfg.train.variant = parse_variant(fields[1]);
        } else if (key == "k") {
            want(1);
            scalar_once(key);
            cfg.train.k = detail::parse_u64(key, fields[1]);
        } else if (key == "lambda") {
            want(1);
            scalar_once(key);
            cfg.train.lambda = detail::parse_real(key, fields[1]);
        } else if (key == "alpha") {
            want(1);
            scalar_once(key);
            cfg.train.alpha = detail::parse_real(key, fields[1]);
        } else if (key == "norm") {
            want(1);
            scalar_once(key);
            cfg.train.norm = parse_norm(fields[1]);
        } else if (key == "epochs") {
            want(1);
            scalar_once(key);
            cfg.train.epochs = detail::parse_u64(key, fields[1]);
        } else if (key == "seed") {
            want(1);
            scalar_once(key);
            cfg.train.seed = detail::parse_u64(key, fields[1]);
        } else if (key == "shuffle") {
            want(1);
            scalar_once(key);
            cfg.train.shuffle = detail::parse_bool(key, fields[1]);
        } else if (key == "knowledge_passes") {
            want(1);
            scalar_once(key);
            cfg.train.knowledge_passes = detail::parse_u64(key, fields[1]);
        } else if (key == "alignment_passes") {
            want(1);
            scalar_once(key);
            cfg.train.alignment_passes = detail::parse_u64(key, fields[1]);
        } else if (key == "output_dir") {
            want(1);
            scalar_once(key);
            cfg.output_dir = fields[1];
        } else if (key == "twa_holdout") {
            want(1);
            scalar_once(key);
            cfg.twa_holdout = detail::parse_real(key, fields[1]);
            if (cfg.twa_holdout < 0.0 || cfg.twa_holdout > 1.0)
                throw ConfigError("twa_holdout must be in [0, 1]");
        } else {
            throw ParseError(path, i + 1, "unknown config key: '" + key + "'");
        }
    }

    if (cfg.languages.empty())
        throw ConfigError("config names no languages: " + path);
    return cfg;
}

// Loads every file the config names. Alignment sets are complete here; the
// verification holdout is carved out separately.
inline MultilingualKB load_kb(const RunConfig& cfg) {
    MultilingualKB kb;
    for (const auto& spec : cfg.languages)
        kb.add_graph(load_graph(spec.path, spec.language));
    for (const auto& spec : cfg.alignments)
        kb.add_alignment(load_alignment(
            spec.path, LangPair{spec.first, spec.second}, kb));
    for (const auto& spec : cfg.ills)
        kb.add_ills(load_ills(spec.path, spec.source, spec.target, kb));
    return kb;
}

// Replaces each alignment set with its training part and returns the
// held-out positives per pair. The split is a pure function of the config
// seed and the pair's position, so training and later verification agree on
// it without any extra state.
inline std::map<LangPair, AlignmentSet> carve_verification_holdout(
    MultilingualKB& kb, const RunConfig& cfg) {
    std::map<LangPair, AlignmentSet> holdouts;
    if (cfg.twa_holdout == 0.0) return holdouts;
    std::uint64_t pair_index = 0;
    for (auto& [pair, set] : kb.alignments) {
        const std::uint64_t seed = derive_seed(
            cfg.train.seed, RngStream::alignment_split, pair_index++);
        auto [train_part, holdout] =
            split_alignment(set, cfg.twa_holdout, seed);
        set = std::move(train_part);
        holdouts[pair] = std::move(holdout);
    }
    return holdouts;
}

// --- CLI-side artifacts next to the serialized model --------------------

// Vocabulary files make a model directory self-contained for evaluation:
// one surface string per line, line number = vocabulary id.
inline std::string entities_vocab_filename(const LanguageId& lang) {
    return "entities_" + lang.code + ".vocab";
}

inline std::string relations_vocab_filename(const LanguageId& lang) {
    return "relations_" + lang.code + ".vocab";
}

inline void write_vocab_files(const MultilingualKB& kb,
                              const std::filesystem::path& model_dir) {
    for (const auto& [lang, graph] : kb.graphs) {
        for (const auto& [name, vocab] :
             {std::pair{entities_vocab_filename(lang), &graph.entities},
              std::pair{relations_vocab_filename(lang), &graph.relations}}) {
            std::ofstream out(model_dir / name, std::ios::binary);
            if (!out)
                throw Error("cannot write vocabulary file: " +
                            (model_dir / name).string());
            for (const std::string& s : *vocab) out << s << '\n';
            if (!out)
                throw Error("failed writing vocabulary file: " +
                            (model_dir / name).string());
        }
    }
}

// Rebuilds index-resolvable (triple-less) graphs from the vocabulary files
// of a model directory. The languages and expected sizes come from the
// loaded model.
inline MultilingualKB load_vocab_kb(const Model& model,
                                    const std::filesystem::path& model_dir) {
    MultilingualKB kb;
    for (const auto& [lang, space] : model.spaces) {
        KnowledgeGraph g;
        g.language = lang;
        for (const auto& [name, vocab, index, expected] :
             {std::tuple{entities_vocab_filename(lang), &g.entities,
                         &g.entity_index, space.entities.rows},
              std::tuple{relations_vocab_filename(lang), &g.relations,
                         &g.relation_index, space.relations.rows}}) {
            const auto path = model_dir / name;
            if (!std::filesystem::exists(path))
                throw LoadError("missing vocabulary file: " + path.string());
            auto lines = detail::read_lines(path.string());
            if (lines.size() != expected)
                throw LoadError("vocabulary file " + path.string() + " has " +
                                std::to_string(lines.size()) +
                                " entries, model expects " +
                                std::to_string(expected));
            for (std::size_t i = 0; i < lines.size(); ++i) {
                if (index->count(lines[i]))
                    throw LoadError("duplicate vocabulary entry in " +
                                    path.string());
                index->emplace(lines[i], static_cast<std::uint32_t>(i));
                vocab->push_back(std::move(lines[i]));
            }
        }
        kb.graphs.emplace(lang, std::move(g));
    }
    return kb;
}

// Per-epoch training log: deterministic columns only (wall time stays on
// the live progress stream).
inline void write_epoch_log(std::ostream& out,
                            const std::vector<EpochReport>& reports) {
    for (const EpochReport& r : reports) {
        char drift[32];
        char cond[32];
        std::snprintf(drift, sizeof drift, "%.6e", r.max_entity_norm_drift);
        std::snprintf(cond, sizeof cond, "%.6e", r.max_matrix_condition);
        out << r.epoch << '\t' << format_fixed(r.mean_knowledge_score, 6)
            << '\t' << format_fixed(r.mean_alignment_score, 6) << '\t'
            << drift << '\t' << cond << '\n';
    }
}

// Held-out verification positives written back in the 6-field alignment
// format so they can be fed to the verifier without reloading the config.
inline void write_alignment_file(const AlignmentSet& set,
                                 const KnowledgeGraph& source,
                                 const KnowledgeGraph& target,
                                 std::ostream& out) {
    for (const TriplePair& p : set.pairs) {
        out << source.entities[p.source.head] << '\t'
            << source.relations[p.source.relation] << '\t'
            << source.entities[p.source.tail] << '\t'
            << target.entities[p.target.head] << '\t'
            << target.relations[p.target.relation] << '\t'
            << target.entities[p.target.tail] << '\n';
    }
}

}  // namespace mkge
