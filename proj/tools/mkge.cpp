// Command-line front end: `train` fits a model from a run config, `stats`
// summarizes the inputs, and `eval` runs the ranking, verification, and
// export tasks against a saved model directory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mkge/mkge.hpp"

namespace fs = std::filesystem;
using namespace mkge;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = s.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

// Runs `fn` against --out if given, stdout otherwise.
template <typename Fn>
void with_output(const std::string& out_path, Fn&& fn) {
    if (out_path.empty()) {
        fn(std::cout);
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error("cannot write output file: " + out_path);
    fn(out);
    if (!out) throw Error("failed writing output file: " + out_path);
}

std::uint32_t resolve_entity_or_throw(const KnowledgeGraph& g,
                                      const std::string& s) {
    if (auto id = g.find_entity(s)) return *id;
    throw Error("entity not in " + g.language.code + " vocabulary: '" + s + "'");
}

std::uint32_t resolve_relation_or_throw(const KnowledgeGraph& g,
                                        const std::string& s) {
    if (auto id = g.find_relation(s)) return *id;
    throw Error("relation not in " + g.language.code + " vocabulary: '" + s +
                "'");
}

struct EvalContext {
    Model model;
    MultilingualKB vocab;
};

EvalContext load_eval_context(const std::string& model_dir) {
    EvalContext ctx;
    ctx.model = load_model(model_dir);
    ctx.vocab = load_vocab_kb(ctx.model, model_dir);
    return ctx;
}

void report_ill_skips(const IllSet& ill) {
    if (ill.skipped_unresolved || ill.skipped_duplicate_source)
        std::cerr << "note: skipped " << ill.skipped_unresolved
                  << " unresolved and " << ill.skipped_duplicate_source
                  << " duplicate-source link lines\n";
}

int cmd_train(const std::string& config_path, std::size_t threads,
              bool quiet) {
    RunConfig cfg = parse_run_config(config_path);
    if (cfg.output_dir.empty())
        throw ConfigError("config must set output_dir for training");
    cfg.train.threads = threads;

    MultilingualKB kb = load_kb(cfg);
    const auto holdouts = carve_verification_holdout(kb, cfg);

    auto [model, reports] = train(kb, cfg.train, quiet ? nullptr : &std::cerr);

    const fs::path out_dir = cfg.output_dir;
    const fs::path model_dir = out_dir / "model";
    save_model(model, model_dir);
    write_vocab_files(kb, model_dir);

    {
        std::ofstream epochs(out_dir / "epochs.tsv", std::ios::binary);
        if (!epochs) throw Error("cannot write epoch log");
        write_epoch_log(epochs, reports);
    }

    for (const auto& [pair, holdout] : holdouts) {
        if (holdout.pairs.empty()) continue;
        const fs::path path = out_dir / ("twa_positives_" + pair.first.code +
                                         "_" + pair.second.code + ".tsv");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write holdout file: " + path.string());
        write_alignment_file(holdout, kb.graph(pair.first),
                             kb.graph(pair.second), out);
    }

    if (!quiet)
        std::cerr << "model written to " << model_dir.string() << '\n';
    return 0;
}

int cmd_stats(const std::string& config_path) {
    const RunConfig cfg = parse_run_config(config_path);
    const MultilingualKB kb = load_kb(cfg);
    write_stats(graph_stats(kb), std::cout);

    for (const auto& [lang, g] : kb.graphs) {
        if (g.duplicates_dropped)
            std::cerr << "note: " << lang.code << ": dropped "
                      << g.duplicates_dropped << " duplicate triples\n";
    }
    for (const auto& [pair, set] : kb.alignments) {
        if (set.duplicates_dropped)
            std::cerr << "note: " << pair.first.code << "-" << pair.second.code
                      << ": dropped " << set.duplicates_dropped
                      << " duplicate aligned pairs\n";
    }
    for (const IllSet& ill : kb.ills) report_ill_skips(ill);
    return 0;
}

int cmd_eval_match(const std::string& model_dir, const std::string& source,
                   const std::string& target, const std::string& ills_path,
                   NormOrder norm, std::size_t threads,
                   const std::string& out_path) {
    const EvalContext ctx = load_eval_context(model_dir);
    const LanguageId src{source};
    const LanguageId tgt{target};
    const IllSet ill = load_ills(ills_path, src, tgt, ctx.vocab);
    report_ill_skips(ill);

    const RankReport report = entity_matching(ctx.model, ill, norm, threads);

    const KnowledgeGraph& sg = ctx.vocab.graph(src);
    const KnowledgeGraph& tg = ctx.vocab.graph(tgt);
    std::vector<std::pair<std::string, std::string>> labels;
    labels.reserve(ill.links.size());
    for (const auto& [e, gold] : ill.links)
        labels.emplace_back(sg.entities[e], tg.entities[gold]);

    with_output(out_path, [&](std::ostream& out) {
        write_rank_report(out, labels, report);
    });
    return 0;
}

int cmd_eval_pr(const std::string& model_dir, const std::string& source,
                const std::string& target, const std::string& ills_path,
                const std::string& thresholds_csv,
                const std::vector<double>& sweep, NormOrder norm,
                std::size_t threads, const std::string& out_path) {
    std::vector<double> thresholds;
    if (!thresholds_csv.empty()) {
        for (const std::string& tok : split_csv(thresholds_csv))
            thresholds.push_back(detail::parse_real("--thresholds", tok));
    } else if (!sweep.empty()) {
        const double lo = sweep[0];
        const double hi = sweep[1];
        const auto count = static_cast<std::size_t>(sweep[2]);
        if (count < 1 || hi < lo)
            throw ConfigError("--sweep wants MIN MAX COUNT with MAX >= MIN");
        for (std::size_t i = 0; i < count; ++i)
            thresholds.push_back(
                count == 1 ? lo : lo + (hi - lo) * double(i) / double(count - 1));
    } else {
        throw ConfigError("eval pr needs --thresholds or --sweep");
    }

    const EvalContext ctx = load_eval_context(model_dir);
    const IllSet ill =
        load_ills(ills_path, LanguageId{source}, LanguageId{target}, ctx.vocab);
    report_ill_skips(ill);

    const auto points = pr_curve(ctx.model, ill, norm, thresholds, threads);
    with_output(out_path, [&](std::ostream& out) { write_pr_points(out, points); });
    return 0;
}

int cmd_eval_twa(const std::string& model_dir, const std::string& config_path,
                 const std::string& lang_a, const std::string& lang_b,
                 const std::string& positives_path, std::size_t folds,
                 const std::optional<std::uint64_t>& seed_flag,
                 const std::string& out_path) {
    RunConfig cfg = parse_run_config(config_path);
    MultilingualKB kb = load_kb(cfg);
    const LangPair pair = canonical_pair(LanguageId{lang_a}, LanguageId{lang_b});

    std::vector<TriplePair> positives;
    if (!positives_path.empty()) {
        const AlignmentSet set = load_alignment(
            positives_path, LangPair{LanguageId{lang_a}, LanguageId{lang_b}},
            kb);
        positives = set.pairs;
    } else {
        const auto holdouts = carve_verification_holdout(kb, cfg);
        const auto it = holdouts.find(pair);
        if (it == holdouts.end() || it->second.pairs.empty())
            throw ConfigError(
                "no verification holdout for this pair; set twa_holdout in "
                "the config or pass --positives");
        positives = it->second.pairs;
    }
    if (positives.empty()) throw Error("no verification positives");

    const Model model = load_model(model_dir);
    for (const auto& [lang, space] : model.spaces) {
        const KnowledgeGraph& g = kb.graph(lang);
        if (space.entities.rows != g.entities.size() ||
            space.relations.rows != g.relations.size())
            throw LoadError("model vocabulary sizes disagree with the config "
                            "inputs for language: " +
                            lang.code);
    }

    const std::uint64_t seed = seed_flag.value_or(cfg.train.seed);
    const auto cases = generate_negatives(
        positives, kb.graph(pair.first), kb.graph(pair.second),
        derive_seed(seed, RngStream::twa_negatives));
    const CvReport report = cross_validate(
        cases, model, pair, folds, derive_seed(seed, RngStream::twa_folds));

    with_output(out_path, [&](std::ostream& out) { write_cv_report(out, report); });
    return 0;
}

int cmd_eval_rank(bool tails, const std::string& model_dir,
                  const std::string& language, const std::string& test_path,
                  NormOrder norm, std::size_t threads,
                  const std::string& out_path) {
    const EvalContext ctx = load_eval_context(model_dir);
    const LanguageId lang{language};
    const KnowledgeGraph& g = ctx.vocab.graph(lang);
    const ResolvedTriples test = resolve_triples(test_path, g);
    if (test.skipped)
        std::cerr << "note: skipped " << test.skipped
                  << " unresolvable test lines\n";

    const RankReport report =
        tails ? tail_prediction(ctx.model, test.triples, lang, norm, threads)
              : relation_prediction(ctx.model, test.triples, lang, norm,
                                    threads);

    std::vector<std::pair<std::string, std::string>> labels;
    labels.reserve(test.triples.size());
    for (const Triple& t : test.triples) {
        if (tails)
            labels.emplace_back(
                g.entities[t.head] + "|" + g.relations[t.relation],
                g.entities[t.tail]);
        else
            labels.emplace_back(g.entities[t.head] + "|" + g.entities[t.tail],
                                g.relations[t.relation]);
    }

    with_output(out_path, [&](std::ostream& out) {
        write_rank_report(out, labels, report);
    });
    return 0;
}

int cmd_eval_complete(const std::string& model_dir, const std::string& from,
                      const std::string& to, const std::string& head,
                      const std::string& relation, const std::string& tail,
                      std::size_t top_n, NormOrder norm,
                      const std::string& out_path) {
    const EvalContext ctx = load_eval_context(model_dir);
    const LanguageId src{from};
    const LanguageId tgt{to};
    const KnowledgeGraph& sg = ctx.vocab.graph(src);
    const KnowledgeGraph& tg = ctx.vocab.graph(tgt);

    PartialTriple query;
    if (!head.empty()) query.head = resolve_entity_or_throw(sg, head);
    if (!relation.empty())
        query.relation = resolve_relation_or_throw(sg, relation);
    if (!tail.empty()) query.tail = resolve_entity_or_throw(sg, tail);

    const auto candidates =
        complete_triple(ctx.model, query, src, tgt, norm, top_n);
    const std::vector<std::string>& surfaces =
        query.relation ? tg.entities : tg.relations;

    with_output(out_path, [&](std::ostream& out) {
        for (const ScoredCandidate& c : candidates)
            out << surfaces[c.index] << '\t' << format_fixed(c.score, 6)
                << '\n';
    });
    return 0;
}

int cmd_eval_pca(const std::string& model_dir, const std::string& language,
                 const std::string& entities_csv,
                 const std::string& entities_file, std::size_t dim,
                 const std::string& out_path) {
    const EvalContext ctx = load_eval_context(model_dir);
    const LanguageId lang{language};
    const KnowledgeGraph& g = ctx.vocab.graph(lang);
    const EmbeddingSpace& space = ctx.model.space(lang);

    std::vector<std::string> labels;
    if (!entities_file.empty()) {
        for (auto& line : detail::read_lines(entities_file))
            if (!line.empty()) labels.push_back(std::move(line));
    } else if (!entities_csv.empty()) {
        labels = split_csv(entities_csv);
    } else {
        // Default: project the whole entity table.
        labels = g.entities;
    }
    if (labels.empty()) throw Error("no entities to project");

    Matrix rows(labels.size(), ctx.model.k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto id = resolve_entity_or_throw(g, labels[i]);
        const auto src = space.entity(id);
        std::copy(src.begin(), src.end(), rows.row(i).begin());
    }

    const Matrix projection = pca_project(rows, dim);
    with_output(out_path, [&](std::ostream& out) {
        write_pca_points(out, labels, projection);
    });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multilingual knowledge-graph embeddings: training, "
                 "matching, verification, completion, and export"};
    app.require_subcommand(1);

    // train
    auto* train_cmd =
        app.add_subcommand("train", "train a model from a run config");
    std::string train_config;
    std::size_t train_threads = 1;
    bool train_quiet = false;
    train_cmd->add_option("--config", train_config, "run config file")
        ->required();
    train_cmd->add_option("--threads", train_threads,
                          "worker threads (1 = reference behavior)");
    train_cmd->add_flag("--quiet", train_quiet, "suppress progress lines");

    // stats
    auto* stats_cmd =
        app.add_subcommand("stats", "summarize the configured inputs");
    std::string stats_config;
    stats_cmd->add_option("--config", stats_config, "run config file")
        ->required();

    // eval with task subcommands
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved model");
    eval_cmd->require_subcommand(1);

    std::string model_dir;
    std::string out_path;
    std::string norm_name = "l2";
    std::size_t threads = 1;
    auto add_common = [&](CLI::App* cmd, bool with_threads = true) {
        cmd->add_option("--model", model_dir, "model directory")->required();
        cmd->add_option("--out", out_path, "output file (default: stdout)");
        cmd->add_option("--norm", norm_name, "ranking norm: l1 or l2");
        if (with_threads)
            cmd->add_option("--threads", threads, "worker threads");
    };

    auto* match_cmd =
        eval_cmd->add_subcommand("match", "cross-lingual entity matching");
    std::string source;
    std::string target;
    std::string ills_path;
    add_common(match_cmd);
    match_cmd->add_option("--source", source, "source language")->required();
    match_cmd->add_option("--target", target, "target language")->required();
    match_cmd->add_option("--ills", ills_path, "gold link file")->required();

    auto* pr_cmd = eval_cmd->add_subcommand(
        "pr", "precision-recall data for thresholded matching");
    std::string thresholds_csv;
    std::vector<double> sweep;
    add_common(pr_cmd);
    pr_cmd->add_option("--source", source, "source language")->required();
    pr_cmd->add_option("--target", target, "target language")->required();
    pr_cmd->add_option("--ills", ills_path, "gold link file")->required();
    pr_cmd->add_option("--thresholds", thresholds_csv,
                       "comma-separated ascending thresholds");
    pr_cmd->add_option("--sweep", sweep, "MIN MAX COUNT linear threshold grid")
        ->expected(3);

    auto* twa_cmd = eval_cmd->add_subcommand(
        "twa", "triple-wise alignment verification (10-fold CV)");
    std::string twa_config;
    std::vector<std::string> twa_pair;
    std::string positives_path;
    std::size_t folds = 10;
    std::uint64_t twa_seed = 0;
    add_common(twa_cmd, /*with_threads=*/false);
    twa_cmd->add_option("--config", twa_config, "run config file")->required();
    twa_cmd->add_option("--pair", twa_pair, "the two languages of the pair")
        ->expected(2)
        ->required();
    twa_cmd->add_option("--positives", positives_path,
                        "verification positives (6-field alignment format); "
                        "default: the config-seeded holdout");
    twa_cmd->add_option("--folds", folds, "cross-validation folds");
    auto* twa_seed_opt =
        twa_cmd->add_option("--seed", twa_seed,
                            "seed for negatives and fold assignment "
                            "(default: config seed)");

    auto* tail_cmd =
        eval_cmd->add_subcommand("tail", "monolingual tail prediction");
    std::string eval_language;
    std::string test_path;
    add_common(tail_cmd);
    tail_cmd->add_option("--language", eval_language, "language")->required();
    tail_cmd->add_option("--test", test_path, "test triple file")->required();

    auto* rel_cmd =
        eval_cmd->add_subcommand("rel", "monolingual relation prediction");
    add_common(rel_cmd);
    rel_cmd->add_option("--language", eval_language, "language")->required();
    rel_cmd->add_option("--test", test_path, "test triple file")->required();

    auto* complete_cmd = eval_cmd->add_subcommand(
        "complete", "cross-lingual triple completion");
    std::string q_head;
    std::string q_relation;
    std::string q_tail;
    std::string from_lang;
    std::string to_lang;
    std::size_t top_n = 10;
    add_common(complete_cmd, /*with_threads=*/false);
    complete_cmd->add_option("--from", from_lang, "query language")->required();
    complete_cmd->add_option("--to", to_lang, "completion language")
        ->required();
    complete_cmd->add_option("--head", q_head, "head entity surface");
    complete_cmd->add_option("--relation", q_relation,
                             "relation surface");
    complete_cmd->add_option("--tail", q_tail, "tail entity surface");
    complete_cmd->add_option("--top", top_n, "number of candidates");

    auto* pca_cmd = eval_cmd->add_subcommand(
        "pca", "2-D principal-component export of entity vectors");
    std::string pca_entities;
    std::string pca_entities_file;
    std::size_t pca_dim = 2;
    add_common(pca_cmd, /*with_threads=*/false);
    pca_cmd->add_option("--language", eval_language, "language")->required();
    pca_cmd->add_option("--entities", pca_entities,
                        "comma-separated entity surfaces");
    pca_cmd->add_option("--entities-file", pca_entities_file,
                        "file with one entity surface per line");
    pca_cmd->add_option("--dim", pca_dim, "output dimensions");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed())
            return cmd_train(train_config, train_threads, train_quiet);
        if (stats_cmd->parsed()) return cmd_stats(stats_config);

        const NormOrder norm = parse_norm(norm_name);
        if (match_cmd->parsed())
            return cmd_eval_match(model_dir, source, target, ills_path, norm,
                                  threads, out_path);
        if (pr_cmd->parsed())
            return cmd_eval_pr(model_dir, source, target, ills_path,
                               thresholds_csv, sweep, norm, threads, out_path);
        if (twa_cmd->parsed()) {
            std::optional<std::uint64_t> seed;
            if (twa_seed_opt->count()) seed = twa_seed;
            return cmd_eval_twa(model_dir, twa_config, twa_pair[0],
                                twa_pair[1], positives_path, folds, seed,
                                out_path);
        }
        if (tail_cmd->parsed())
            return cmd_eval_rank(true, model_dir, eval_language, test_path,
                                 norm, threads, out_path);
        if (rel_cmd->parsed())
            return cmd_eval_rank(false, model_dir, eval_language, test_path,
                                 norm, threads, out_path);
        if (complete_cmd->parsed())
            return cmd_eval_complete(model_dir, from_lang, to_lang, q_head,
                                     q_relation, q_tail, top_n, norm,
                                     out_path);
        if (pca_cmd->parsed())
            return cmd_eval_pca(model_dir, eval_language, pca_entities,
                                pca_entities_file, pca_dim, out_path);
        std::cerr << "error: no command selected\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
