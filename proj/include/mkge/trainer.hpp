#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "mkge/alignment.hpp"
#include "mkge/kg.hpp"
#include "mkge/knowledge.hpp"
#include "mkge/linalg.hpp"
#include "mkge/model.hpp"
#include "mkge/rng.hpp"
#include "mkge/types.hpp"

namespace mkge {

struct TrainConfig {
    Variant variant = Variant::var1;
    std::size_t k = 75;
    double lambda = 0.01;
    double alpha = 5.0;
    NormOrder norm = NormOrder::l2;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
    bool shuffle = true;
    // How many consecutive passes each group of steps makes before the loop
    // switches to the other group. 1/1 alternates the two objectives epoch
    // by epoch.
    std::size_t knowledge_passes = 1;
    std::size_t alignment_passes = 1;
    std::size_t threads = 1;
};

// Post-epoch snapshot: score means are measured by a read-only sweep after
// the epoch's updates, norm drift over every entity vector, condition number
// over every transit matrix (0 when the variant has none, +inf when a matrix
// has become numerically singular).
struct EpochReport {
    std::size_t epoch = 0;
    double mean_knowledge_score = 0.0;
    double mean_alignment_score = 0.0;
    double max_entity_norm_drift = 0.0;
    double max_matrix_condition = 0.0;
    double wall_ms = 0.0;
};

namespace detail {

// Entity update: step along -grad, then back onto the sphere. Skipped
// entirely at zero step or zero gradient so a stationary parameter is left
// bit-identical. A vector that lands exactly at the origin has no direction
// left; it is re-randomized on the sphere.
inline void update_entity(std::span<double> v, double step,
                          std::span<const double> grad, Rng& rezero) {
    if (step == 0.0 || all_zero(grad)) return;
    axpy(v, -step, grad);
    while (!try_project_to_sphere(v)) rezero.fill_normal(v);
}

// Unconstrained parameter update (relations, shifts): no projection.
inline void update_free(std::span<double> v, double step,
                        std::span<const double> grad) {
    if (step == 0.0 || all_zero(grad)) return;
    axpy(v, -step, grad);
}

inline void update_matrix(TransitMatrix& m, double step, const Matrix& grad) {
    if (step == 0.0 || all_zero(grad.data)) return;
    // mutate() drops the cached inverse; only touch it for a real change.
    Matrix& target = m.mutate();
    axpy(target.data, -step, grad.data);
}

}  // namespace detail

// One per-triple update of the knowledge objective: h, r, t move along
// -lambda * grad; h and t are re-projected to the unit sphere.
inline void sgd_step_knowledge(EmbeddingSpace& space, const Triple& t,
                               double lambda, NormOrder norm, Rng& rezero) {
    const TripleGrad g = triple_grad(space, t, norm);
    detail::update_entity(space.entity(t.head), lambda, g.head, rezero);
    detail::update_free(space.relation(t.relation), lambda, g.head);
    detail::update_entity(space.entity(t.tail), lambda, g.tail, rezero);
}

// One per-pair update of the alignment objective, weighted by alpha. Entity
// vectors on both sides are re-projected; relation vectors, shifts, and
// matrices are not.
inline void sgd_step_alignment(Model& model, const LangPair& pair,
                               const TriplePair& tp, double lambda,
                               double alpha, NormOrder norm, Rng& rezero) {
    const double step = lambda * alpha;
    if (step == 0.0) return;
    const AlignmentGrad g = alignment_grad(model, pair, tp, norm);

    EmbeddingSpace& src = model.space(pair.first);
    EmbeddingSpace& tgt = model.space(pair.second);
    detail::update_entity(src.entity(tp.source.head), step, g.source.head,
                          rezero);
    detail::update_free(src.relation(tp.source.relation), step,
                        g.source.relation);
    detail::update_entity(src.entity(tp.source.tail), step, g.source.tail,
                          rezero);
    detail::update_entity(tgt.entity(tp.target.head), step, g.target.head,
                          rezero);
    detail::update_free(tgt.relation(tp.target.relation), step,
                        g.target.relation);
    detail::update_entity(tgt.entity(tp.target.tail), step, g.target.tail,
                          rezero);

    TransitionParams& params = model.transition(pair);
    if (g.entity_shift)
        detail::update_free(*params.entity_shift, step, *g.entity_shift);
    if (g.relation_shift)
        detail::update_free(*params.relation_shift, step, *g.relation_shift);
    if (g.entity_map)
        detail::update_matrix(*params.entity_map, step, *g.entity_map);
    if (g.relation_map)
        detail::update_matrix(*params.relation_map, step, *g.relation_map);
}

namespace detail {

inline void validate_train_config(const TrainConfig& cfg,
                                  const MultilingualKB& kb) {
    if (cfg.k == 0) throw ConfigError("k must be at least 1");
    if (!(cfg.lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (cfg.alpha < 0.0) throw ConfigError("alpha must be non-negative");
    if (cfg.threads == 0) throw ConfigError("threads must be at least 1");
    if (cfg.knowledge_passes == 0 || cfg.alignment_passes == 0)
        throw ConfigError("pass counts must be at least 1");
    if (kb.graphs.empty()) throw ConfigError("no graphs loaded");

    const bool needs_params = cfg.variant == Variant::var3 ||
                              cfg.variant == Variant::var4 ||
                              cfg.variant == Variant::var5;
    if (needs_params) {
        bool any = false;
        for (const auto& [pair, set] : kb.alignments)
            any = any || !set.pairs.empty();
        if (!any)
            throw ConfigError(to_string(cfg.variant) +
                              " requires a non-empty alignment set");
    }
}

// Full shuffled pass of per-triple updates over one language.
inline void knowledge_pass(EmbeddingSpace& space, const KnowledgeGraph& graph,
                           const TrainConfig& cfg, std::uint64_t epoch,
                           std::uint64_t lang_index, std::uint64_t pass) {
    Rng rng(derive_seed(cfg.seed, RngStream::knowledge_shuffle, epoch,
                        lang_index, pass));
    const auto order =
        index_permutation(graph.triples.size(), rng, cfg.shuffle);
    // Re-randomization draws come after the shuffle on the same stream.
    for (std::size_t idx : order)
        sgd_step_knowledge(space, graph.triples[idx], cfg.lambda, cfg.norm,
                           rng);
}

inline void alignment_pass(Model& model, const MultilingualKB& kb,
                           const TrainConfig& cfg, std::uint64_t epoch,
                           std::uint64_t pass) {
    std::uint64_t pair_index = 0;
    for (const auto& [pair, set] : kb.alignments) {
        const std::uint64_t this_pair = pair_index++;
        if (set.pairs.empty()) continue;
        Rng rng(derive_seed(cfg.seed, RngStream::alignment_shuffle, epoch,
                            this_pair, pass));
        const auto order = index_permutation(set.pairs.size(), rng, cfg.shuffle);
        for (std::size_t idx : order)
            sgd_step_alignment(model, pair, set.pairs[idx], cfg.lambda,
                               cfg.alpha, cfg.norm, rng);
    }
}

inline EpochReport measure_epoch(const Model& model, const MultilingualKB& kb,
                                 const TrainConfig& cfg, std::size_t epoch) {
    EpochReport report;
    report.epoch = epoch;

    double k_sum = 0.0;
    std::size_t k_count = 0;
    double drift = 0.0;
    for (const auto& [lang, graph] : kb.graphs) {
        const EmbeddingSpace& space = model.space(lang);
        for (const Triple& t : graph.triples)
            k_sum += triple_score(space, t, cfg.norm);
        k_count += graph.triples.size();
        for (std::size_t i = 0; i < space.entities.rows; ++i)
            drift = std::max(drift,
                             std::fabs(norm_l2(space.entities.row(i)) - 1.0));
    }
    report.mean_knowledge_score = k_count ? k_sum / double(k_count) : 0.0;
    report.max_entity_norm_drift = drift;

    double a_sum = 0.0;
    std::size_t a_count = 0;
    for (const auto& [pair, set] : kb.alignments) {
        for (const TriplePair& tp : set.pairs)
            a_sum += alignment_score(model, pair, tp, cfg.norm);
        a_count += set.pairs.size();
    }
    report.mean_alignment_score = a_count ? a_sum / double(a_count) : 0.0;

    double cond = 0.0;
    for (const auto& [pair, params] : model.transitions) {
        for (const auto* m : {params.entity_map ? &*params.entity_map : nullptr,
                              params.relation_map ? &*params.relation_map
                                                  : nullptr}) {
            if (!m) continue;
            try {
                cond = std::max(cond, condition_number(m->matrix(), m->inverse()));
            } catch (const NumericError&) {
                cond = std::numeric_limits<double>::infinity();
            }
        }
    }
    report.max_matrix_condition = cond;
    return report;
}

}  // namespace detail

// Writes one progress line per epoch: epoch, mean knowledge score, mean
// alignment score, wall-clock milliseconds.
inline void write_progress_line(std::ostream& out, const EpochReport& r) {
    out << r.epoch << '\t' << format_fixed(r.mean_knowledge_score, 6) << '\t'
        << format_fixed(r.mean_alignment_score, 6) << '\t'
        << static_cast<long long>(std::llround(r.wall_ms)) << '\n';
}

// Runs cfg.epochs epochs of alternating online SGD on an already initialized
// model: each epoch makes the configured number of full shuffled knowledge
// passes over every language, then alignment passes over every alignment
// set. Deterministic in cfg.seed for any thread count (languages own
// disjoint parameters, so the parallel knowledge pass commutes).
inline std::vector<EpochReport> train_epochs(Model& model,
                                             const MultilingualKB& kb,
                                             const TrainConfig& cfg,
                                             std::ostream* progress = nullptr) {
    detail::validate_train_config(cfg, kb);
    if (model.variant != cfg.variant || model.k != cfg.k)
        throw ConfigError("model does not match the training configuration");

    std::vector<EpochReport> reports;
    reports.reserve(cfg.epochs);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();

        for (std::size_t pass = 0; pass < cfg.knowledge_passes; ++pass) {
            if (cfg.threads > 1 && kb.graphs.size() > 1) {
                std::vector<std::thread> workers;
                std::uint64_t lang_index = 0;
                for (const auto& [lang, graph] : kb.graphs) {
                    EmbeddingSpace& space = model.space(lang);
                    workers.emplace_back([&space, &graph, &cfg, epoch, pass,
                                          lang_index] {
                        detail::knowledge_pass(space, graph, cfg, epoch,
                                               lang_index, pass);
                    });
                    ++lang_index;
                }
                for (auto& w : workers) w.join();
            } else {
                std::uint64_t lang_index = 0;
                for (const auto& [lang, graph] : kb.graphs) {
                    detail::knowledge_pass(model.space(lang), graph, cfg,
                                           epoch, lang_index, pass);
                    ++lang_index;
                }
            }
        }

        // The alignment pass writes into two spaces at once, so it stays
        // sequential. Skipping it at alpha = 0 keeps the run bit-identical
        // to one with the pass disabled.
        if (cfg.alpha != 0.0) {
            for (std::size_t pass = 0; pass < cfg.alignment_passes; ++pass)
                detail::alignment_pass(model, kb, cfg, epoch, pass);
        }

        EpochReport report = detail::measure_epoch(model, kb, cfg, epoch);
        report.wall_ms =
            std::chrono::duration<double, std::milli>(
                std::chrono::steady_clock::now() - start)
                .count();
        if (progress) write_progress_line(*progress, report);
        reports.push_back(report);
    }
    return reports;
}

// Initializes a model from the KB and trains it.
inline std::pair<Model, std::vector<EpochReport>> train(
    const MultilingualKB& kb, const TrainConfig& cfg,
    std::ostream* progress = nullptr) {
    detail::validate_train_config(cfg, kb);
    Model model = init_model(kb, cfg.variant, cfg.k, cfg.seed);
    auto reports = train_epochs(model, kb, cfg, progress);
    return {std::move(model), std::move(reports)};
}

}  // namespace mkge
