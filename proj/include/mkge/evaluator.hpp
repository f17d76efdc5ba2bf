#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mkge/alignment.hpp"
#include "mkge/kg.hpp"
#include "mkge/linalg.hpp"
#include "mkge/model.hpp"
#include "mkge/types.hpp"

namespace mkge {

// Per-query 1-based gold ranks with the two aggregate metrics.
struct RankReport {
    std::vector<std::size_t> ranks;
    double hits_at_10 = 0.0;
    double mean_rank = 0.0;
};

struct PrPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

inline RankReport make_rank_report(std::vector<std::size_t> ranks) {
    RankReport r;
    r.ranks = std::move(ranks);
    if (r.ranks.empty()) throw Error("rank report over an empty query set");
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t rank : r.ranks) {
        if (rank <= 10) ++hits;
        sum += double(rank);
    }
    r.hits_at_10 = 100.0 * double(hits) / double(r.ranks.size());
    r.mean_rank = sum / double(r.ranks.size());
    return r;
}

namespace detail {

inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([=, &fn] {
            // Contiguous chunks; each index is handled exactly once.
            const std::size_t begin = n * w / workers;
            const std::size_t end = n * (w + 1) / workers;
            for (std::size_t i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

inline double row_distance(std::span<const double> query,
                           std::span<const double> row, NormOrder norm) {
    double acc = 0.0;
    if (norm == NormOrder::l1) {
        for (std::size_t i = 0; i < query.size(); ++i)
            acc += std::fabs(query[i] - row[i]);
    } else {
        for (std::size_t i = 0; i < query.size(); ++i) {
            const double d = query[i] - row[i];
            acc += d * d;
        }
        acc = std::sqrt(acc);
    }
    return acc;
}

}  // namespace detail

// 1-based rank of the target row among all rows sorted by ascending distance
// to the query; ties resolve by ascending row index. Counting instead of
// sorting keeps it O(n k).
inline std::size_t rank_target(std::span<const double> query,
                               const Matrix& candidates, std::size_t target,
                               NormOrder norm) {
    if (target >= candidates.rows)
        throw Error("rank target out of range");
    const double target_dist =
        detail::row_distance(query, candidates.row(target), norm);
    std::size_t rank = 1;
    for (std::size_t i = 0; i < candidates.rows; ++i) {
        if (i == target) continue;
        const double d = detail::row_distance(query, candidates.row(i), norm);
        if (d < target_dist || (d == target_dist && i < target)) ++rank;
    }
    return rank;
}

// Cross-lingual entity matching: each gold link is scored by ranking the
// transited source entity against every entity of the target language.
inline RankReport entity_matching(const Model& model, const IllSet& ill,
                                  NormOrder norm, std::size_t threads = 1) {
    if (ill.links.empty()) throw Error("empty ILL set");
    const EmbeddingSpace& src = model.space(ill.source);
    const EmbeddingSpace& tgt = model.space(ill.target);

    std::vector<std::size_t> ranks(ill.links.size());
    detail::parallel_for(ill.links.size(), threads, [&](std::size_t i) {
        const auto [e, gold] = ill.links[i];
        const auto query = transit_entity_between(model, ill.source,
                                                  ill.target, src.entity(e));
        ranks[i] = rank_target(query, tgt.entities, gold, norm);
    });
    return make_rank_report(std::move(ranks));
}

// Precision/recall of thresholded top-1 matching: a link counts as predicted
// when its nearest neighbor lies closer than the threshold, and as correct
// when that neighbor is the gold target.
inline std::vector<PrPoint> pr_curve(const Model& model, const IllSet& ill,
                                     NormOrder norm,
                                     const std::vector<double>& thresholds,
                                     std::size_t threads = 1) {
    if (ill.links.empty()) throw Error("empty ILL set");
    if (thresholds.empty()) throw Error("empty threshold list");
    if (!std::is_sorted(thresholds.begin(), thresholds.end()))
        throw Error("thresholds must be sorted ascending");

    const EmbeddingSpace& src = model.space(ill.source);
    const EmbeddingSpace& tgt = model.space(ill.target);

    std::vector<double> nn_dist(ill.links.size());
    std::vector<char> nn_correct(ill.links.size());
    detail::parallel_for(ill.links.size(), threads, [&](std::size_t i) {
        const auto [e, gold] = ill.links[i];
        const auto query = transit_entity_between(model, ill.source,
                                                  ill.target, src.entity(e));
        std::size_t best = 0;
        double best_dist = detail::row_distance(query, tgt.entities.row(0), norm);
        for (std::size_t c = 1; c < tgt.entities.rows; ++c) {
            const double d = detail::row_distance(query, tgt.entities.row(c), norm);
            if (d < best_dist) {
                best = c;
                best_dist = d;
            }
        }
        nn_dist[i] = best_dist;
        nn_correct[i] = best == gold ? 1 : 0;
    });

    std::vector<PrPoint> points;
    points.reserve(thresholds.size());
    for (double sigma : thresholds) {
        std::size_t predicted = 0;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < nn_dist.size(); ++i) {
            if (nn_dist[i] < sigma) {
                ++predicted;
                if (nn_correct[i]) ++correct;
            }
        }
        PrPoint p;
        p.threshold = sigma;
        p.precision = predicted ? double(correct) / double(predicted) : 1.0;
        p.recall = double(correct) / double(ill.links.size());
        points.push_back(p);
    }
    return points;
}

// Monolingual tail prediction: rank the gold tail against all entities for
// the query point h + r.
inline RankReport tail_prediction(const Model& model,
                                  const std::vector<Triple>& test,
                                  const LanguageId& language, NormOrder norm,
                                  std::size_t threads = 1) {
    if (test.empty()) throw Error("empty test set");
    const EmbeddingSpace& space = model.space(language);
    std::vector<std::size_t> ranks(test.size());
    detail::parallel_for(test.size(), threads, [&](std::size_t i) {
        const Triple& t = test[i];
        const auto h = space.entity(t.head);
        const auto r = space.relation(t.relation);
        std::vector<double> query(h.size());
        for (std::size_t j = 0; j < query.size(); ++j) query[j] = h[j] + r[j];
        ranks[i] = rank_target(query, space.entities, t.tail, norm);
    });
    return make_rank_report(std::move(ranks));
}

// Monolingual relation prediction: rank the gold relation against all
// relation vectors for the query point t - h.
inline RankReport relation_prediction(const Model& model,
                                      const std::vector<Triple>& test,
                                      const LanguageId& language,
                                      NormOrder norm,
                                      std::size_t threads = 1) {
    if (test.empty()) throw Error("empty test set");
    const EmbeddingSpace& space = model.space(language);
    std::vector<std::size_t> ranks(test.size());
    detail::parallel_for(test.size(), threads, [&](std::size_t i) {
        const Triple& t = test[i];
        const auto h = space.entity(t.head);
        const auto tl = space.entity(t.tail);
        std::vector<double> query(h.size());
        for (std::size_t j = 0; j < query.size(); ++j) query[j] = tl[j] - h[j];
        ranks[i] = rank_target(query, space.relations, t.relation, norm);
    });
    return make_rank_report(std::move(ranks));
}

// A triple with exactly one unknown slot, in source-language indices.
struct PartialTriple {
    std::optional<std::uint32_t> head;
    std::optional<std::uint32_t> relation;
    std::optional<std::uint32_t> tail;
};

struct ScoredCandidate {
    std::uint32_t index = 0;
    double score = 0.0;
};

// Cross-lingual triple completion: the known elements are transited into the
// target space, the unknown slot is filled from the target vocabulary, and
// candidates are returned ascending by TransE score (ties by index).
inline std::vector<ScoredCandidate> complete_triple(
    const Model& model, const PartialTriple& query, const LanguageId& from,
    const LanguageId& to, NormOrder norm, std::size_t top_n) {
    const int unknowns = int(!query.head.has_value()) +
                         int(!query.relation.has_value()) +
                         int(!query.tail.has_value());
    if (unknowns != 1)
        throw ConfigError("completion query must have exactly one unknown slot");
    if (top_n == 0) throw ConfigError("top_n must be at least 1");

    const EmbeddingSpace& src = model.space(from);
    const EmbeddingSpace& tgt = model.space(to);
    const std::size_t k = model.k;

    const Matrix* candidates = nullptr;
    // The fixed part of the displacement: candidate enters with +1 for a
    // missing head, -1 otherwise (score is ||h + r - t|| with the candidate
    // substituted into its slot).
    std::vector<double> fixed(k, 0.0);
    double candidate_sign = 1.0;

    if (!query.tail) {
        const auto h = transit_entity_between(model, from, to,
                                              src.entity(*query.head));
        const auto r = transit_relation_between(model, from, to,
                                                src.relation(*query.relation));
        for (std::size_t i = 0; i < k; ++i) fixed[i] = h[i] + r[i];
        candidate_sign = -1.0;
        candidates = &tgt.entities;
    } else if (!query.head) {
        const auto r = transit_relation_between(model, from, to,
                                                src.relation(*query.relation));
        const auto t = transit_entity_between(model, from, to,
                                              src.entity(*query.tail));
        for (std::size_t i = 0; i < k; ++i) fixed[i] = r[i] - t[i];
        candidate_sign = 1.0;
        candidates = &tgt.entities;
    } else {
        const auto h = transit_entity_between(model, from, to,
                                              src.entity(*query.head));
        const auto t = transit_entity_between(model, from, to,
                                              src.entity(*query.tail));
        for (std::size_t i = 0; i < k; ++i) fixed[i] = h[i] - t[i];
        candidate_sign = 1.0;
        candidates = &tgt.relations;
    }

    std::vector<ScoredCandidate> scored(candidates->rows);
    std::vector<double> d(k);
    for (std::size_t c = 0; c < candidates->rows; ++c) {
        const auto row = candidates->row(c);
        for (std::size_t i = 0; i < k; ++i)
            d[i] = fixed[i] + candidate_sign * row[i];
        scored[c] = {static_cast<std::uint32_t>(c), vec_norm(d, norm)};
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const ScoredCandidate& a, const ScoredCandidate& b) {
                         return a.score < b.score;
                     });
    if (scored.size() > top_n) scored.resize(top_n);
    return scored;
}

// Projects rows onto their top principal components: rows are centered, the
// sample covariance is eigendecomposed, components come in descending
// eigenvalue order, and each component's sign is fixed so its first nonzero
// coordinate is positive.
inline Matrix pca_project(const Matrix& vectors, std::size_t out_dim = 2) {
    const std::size_t m = vectors.rows;
    const std::size_t k = vectors.cols;
    if (out_dim == 0 || out_dim > k)
        throw ConfigError("pca output dimension must be in [1, k]");
    if (m < out_dim) throw ConfigError("pca needs at least out_dim rows");

    Matrix centered = vectors;
    for (std::size_t c = 0; c < k; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < m; ++r) mean += centered.at(r, c);
        mean /= double(m);
        for (std::size_t r = 0; r < m; ++r) centered.at(r, c) -= mean;
    }

    // Sample covariance (divides by m-1; m >= 2 because out_dim >= 1 and the
    // degenerate m = 1 case cannot reach here with out_dim <= k <= ... guard).
    if (m < 2) throw ConfigError("pca needs at least 2 rows");
    Matrix cov(k, k);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            double s = 0.0;
            for (std::size_t r = 0; r < m; ++r)
                s += centered.at(r, a) * centered.at(r, b);
            s /= double(m - 1);
            cov.at(a, b) = s;
            cov.at(b, a) = s;
        }
    }

    double total_var = 0.0;
    for (std::size_t a = 0; a < k; ++a) total_var += cov.at(a, a);
    const double scale = std::max(1.0, max_abs(vectors));
    if (total_var <= 1e-24 * scale * scale)
        throw NumericError("pca input is degenerate (all rows identical)");

    const SymmetricEigen eig = jacobi_eigen(cov);

    Matrix projection(m, out_dim);
    for (std::size_t comp = 0; comp < out_dim; ++comp) {
        // Component = column `comp` of the eigenvector matrix.
        std::vector<double> v(k);
        for (std::size_t a = 0; a < k; ++a) v[a] = eig.vectors.at(a, comp);
        double sign = 1.0;
        for (std::size_t a = 0; a < k; ++a) {
            if (v[a] != 0.0) {
                sign = v[a] > 0.0 ? 1.0 : -1.0;
                break;
            }
        }
        for (std::size_t r = 0; r < m; ++r) {
            double s = 0.0;
            for (std::size_t a = 0; a < k; ++a) s += centered.at(r, a) * v[a];
            projection.at(r, comp) = sign * s;
        }
    }
    return projection;
}

// --- report writers ---------------------------------------------------

// One line per query (source and gold labels supplied by the caller),
// followed by the two aggregate lines.
inline void write_rank_report(
    std::ostream& out,
    const std::vector<std::pair<std::string, std::string>>& labels,
    const RankReport& report) {
    if (labels.size() != report.ranks.size())
        throw Error("label list does not match rank list");
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << labels[i].first << '\t' << labels[i].second << '\t'
            << report.ranks[i] << '\n';
    out << "HITS@10\t" << format_fixed(report.hits_at_10, 2) << '\n';
    out << "MEAN\t" << format_fixed(report.mean_rank, 2) << '\n';
}

inline void write_pr_points(std::ostream& out,
                            const std::vector<PrPoint>& points) {
    for (const PrPoint& p : points)
        out << format_fixed(p.threshold, 6) << '\t'
            << format_fixed(p.precision, 6) << '\t'
            << format_fixed(p.recall, 6) << '\n';
}

inline void write_pca_points(std::ostream& out,
                             const std::vector<std::string>& labels,
                             const Matrix& projection) {
    if (labels.size() != projection.rows)
        throw Error("label list does not match projection rows");
    for (std::size_t r = 0; r < projection.rows; ++r) {
        out << labels[r];
        for (std::size_t c = 0; c < projection.cols; ++c)
            out << '\t' << format_fixed(projection.at(r, c), 6);
        out << '\n';
    }
}

}  // namespace mkge
