#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "mkge/alignment.hpp"
#include "mkge/kg.hpp"
#include "mkge/model.hpp"
#include "mkge/rng.hpp"
#include "mkge/types.hpp"

namespace mkge {

// How a labeled case was produced: genuine alignment, single-slot
// replacement, or whole-triple substitution. Kept so accuracies can be
// broken down by corruption kind.
enum class Corruption { none, slot, triple };

struct LabeledCase {
    TriplePair pair;
    bool label = false;  // true = genuine alignment
    Corruption corruption = Corruption::none;
};

struct CvReport {
    std::vector<double> fold_accuracies;
    std::vector<double> thresholds;
    double mean = 0.0;
    double std_dev = 0.0;
};

// Labeled verification cases from a positive set: every positive (label
// true), one single-slot corruption per positive, and whole-triple
// substitutions for half of them (rounded up), giving an exact
// 1 : 1 : 0.5 mix. Corrupted pairs that collide with a positive are
// re-sampled. Deterministic in seed.
inline std::vector<LabeledCase> generate_negatives(
    const std::vector<TriplePair>& positives, const KnowledgeGraph& source,
    const KnowledgeGraph& target, std::uint64_t seed) {
    if (positives.empty()) throw Error("no positive cases");
    for (const KnowledgeGraph* g : {&source, &target}) {
        if (g->entities.size() < 2 || g->relations.size() < 2 ||
            g->triples.size() < 2)
            throw Error("vocabulary of " + g->language.code +
                        " too small to corrupt (need 2 entities, 2 "
                        "relations, 2 triples)");
    }

    const std::set<TriplePair> positive_set(positives.begin(), positives.end());
    Rng rng(seed);

    // Uniform draw over [0, n) excluding `current`.
    auto draw_other = [&rng](std::uint32_t current, std::size_t n) {
        std::uint64_t x = rng.uniform_below(n - 1);
        if (x >= current) ++x;
        return static_cast<std::uint32_t>(x);
    };

    std::vector<LabeledCase> cases;
    cases.reserve(positives.size() * 2 + (positives.size() + 1) / 2);
    for (const TriplePair& p : positives)
        cases.push_back({p, true, Corruption::none});

    constexpr int kMaxTries = 10000;

    for (const TriplePair& base : positives) {
        LabeledCase c{base, false, Corruption::slot};
        int tries = 0;
        do {
            if (++tries > kMaxTries)
                throw Error("could not generate a distinct corrupted case");
            c.pair = base;
            switch (rng.uniform_below(6)) {
                case 0:
                    c.pair.source.head =
                        draw_other(base.source.head, source.entities.size());
                    break;
                case 1:
                    c.pair.source.relation = draw_other(
                        base.source.relation, source.relations.size());
                    break;
                case 2:
                    c.pair.source.tail =
                        draw_other(base.source.tail, source.entities.size());
                    break;
                case 3:
                    c.pair.target.head =
                        draw_other(base.target.head, target.entities.size());
                    break;
                case 4:
                    c.pair.target.relation = draw_other(
                        base.target.relation, target.relations.size());
                    break;
                default:
                    c.pair.target.tail =
                        draw_other(base.target.tail, target.entities.size());
                    break;
            }
        } while (positive_set.count(c.pair));
        cases.push_back(c);
    }

    const std::size_t substitutions = (positives.size() + 1) / 2;
    for (std::size_t i = 0; i < substitutions; ++i) {
        const TriplePair& base = positives[i];
        LabeledCase c{base, false, Corruption::triple};
        int tries = 0;
        do {
            if (++tries > kMaxTries)
                throw Error("could not generate a distinct substituted case");
            c.pair = base;
            if (rng.uniform_below(2) == 0) {
                const auto& triples = source.triples;
                c.pair.source =
                    triples[rng.uniform_below(triples.size())];
            } else {
                const auto& triples = target.triples;
                c.pair.target =
                    triples[rng.uniform_below(triples.size())];
            }
        } while (c.pair == base || positive_set.count(c.pair));
        cases.push_back(c);
    }
    return cases;
}

// Triple-pair dissimilarity: the sum of the three transited residual L2
// norms. Always L2, whatever norm the model was trained with. With reverse
// set, tau is applied from the pair's second language back to the first.
inline double dissimilarity(const Model& model, const LangPair& pair,
                            const TriplePair& tp, bool reverse = false) {
    const EmbeddingSpace& src = model.space(pair.first);
    const EmbeddingSpace& tgt = model.space(pair.second);
    const TransitionParams* params = model.find_transition(pair);
    if (!params) {
        if (model.variant == Variant::var1 || model.variant == Variant::var2)
            params = &detail::empty_transition();
        else
            throw ConfigError("model has no transition parameters for pair: " +
                              pair.first.code + "-" + pair.second.code);
    }
    const Variant v = model.variant;

    auto term = [&](std::span<const double> a, std::span<const double> b,
                    bool relation) {
        // Residual of tau(x) against the counterpart y.
        std::vector<double> tx;
        std::span<const double> y;
        if (!reverse) {
            tx = relation ? transit_relation(*params, v, a)
                          : transit_entity(*params, v, a);
            y = b;
        } else {
            tx = relation ? transit_relation(*params, v, b, true)
                          : transit_entity(*params, v, b, true);
            y = a;
        }
        return norm_l2(vec_sub(tx, y));
    };

    return term(src.entity(tp.source.head), tgt.entity(tp.target.head), false) +
           term(src.relation(tp.source.relation),
                tgt.relation(tp.target.relation), true) +
           term(src.entity(tp.source.tail), tgt.entity(tp.target.tail), false);
}

struct ThresholdFit {
    double sigma = 0.0;
    double accuracy = 0.0;
};

// Threshold maximizing training accuracy of the rule (score < sigma ->
// positive). Candidates are midpoints between consecutive distinct scores
// plus one sentinel below the minimum and one above the maximum; accuracy
// ties resolve to the smallest candidate.
inline ThresholdFit fit_threshold(const std::vector<double>& scores,
                                  const std::vector<char>& labels) {
    if (scores.size() != labels.size())
        throw Error("scores and labels differ in length");
    bool any_pos = false;
    bool any_neg = false;
    for (char l : labels) (l ? any_pos : any_neg) = true;
    if (!any_pos || !any_neg)
        throw Error("threshold fitting needs both labels present");

    std::vector<double> sorted(scores);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<double> candidates;
    candidates.reserve(sorted.size() + 1);
    candidates.push_back(sorted.front() - 1.0);
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        candidates.push_back(sorted[i] + (sorted[i + 1] - sorted[i]) / 2.0);
    candidates.push_back(sorted.back() + 1.0);

    ThresholdFit best;
    best.sigma = candidates.front();
    best.accuracy = -1.0;
    for (double sigma : candidates) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const bool predicted = scores[i] < sigma;
            if (predicted == bool(labels[i])) ++correct;
        }
        const double acc = double(correct) / double(scores.size());
        if (acc > best.accuracy) {
            best.accuracy = acc;
            best.sigma = sigma;
        }
    }
    return best;
}

// Accuracy of a fixed threshold restricted to cases of one corruption kind
// (Corruption::none selects the positives).
inline double accuracy_by_kind(const std::vector<LabeledCase>& cases,
                               const std::vector<double>& scores, double sigma,
                               Corruption kind) {
    std::size_t total = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        if (cases[i].corruption != kind) continue;
        ++total;
        if ((scores[i] < sigma) == cases[i].label) ++correct;
    }
    if (total == 0) throw Error("no cases of the requested kind");
    return double(correct) / double(total);
}

namespace detail {

// Near-equal contiguous fold boundaries over n shuffled indices.
inline std::pair<std::size_t, std::size_t> fold_bounds(std::size_t n,
                                                       std::size_t folds,
                                                       std::size_t f) {
    return {n * f / folds, n * (f + 1) / folds};
}

}  // namespace detail

// K-fold cross-validation of the threshold classifier over pre-computed
// scores. Cases are shuffled by seed; a shuffle that leaves any training
// split without both labels is redrawn (bounded retries).
inline CvReport cross_validate_scores(const std::vector<double>& scores,
                                      const std::vector<char>& labels,
                                      std::size_t folds, std::uint64_t seed) {
    const std::size_t n = scores.size();
    if (folds < 2) throw Error("cross-validation needs at least 2 folds");
    if (n < folds) throw Error("fewer cases than folds");
    if (labels.size() != n) throw Error("scores and labels differ in length");

    Rng rng(seed);
    std::vector<std::size_t> order;
    constexpr int kMaxShuffles = 100;
    bool usable = false;
    for (int attempt = 0; attempt < kMaxShuffles && !usable; ++attempt) {
        order = index_permutation(n, rng, true);
        usable = true;
        for (std::size_t f = 0; f < folds && usable; ++f) {
            const auto [lo, hi] = detail::fold_bounds(n, folds, f);
            bool pos = false;
            bool neg = false;
            // The training split is everything outside [lo, hi).
            for (std::size_t i = 0; i < n; ++i) {
                if (i >= lo && i < hi) continue;
                (labels[order[i]] ? pos : neg) = true;
            }
            usable = pos && neg;
        }
    }
    if (!usable)
        throw Error("could not split cases with both labels in every fold");

    CvReport report;
    report.fold_accuracies.reserve(folds);
    report.thresholds.reserve(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        const auto [lo, hi] = detail::fold_bounds(n, folds, f);
        std::vector<double> train_scores;
        std::vector<char> train_labels;
        train_scores.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (i >= lo && i < hi) continue;
            train_scores.push_back(scores[order[i]]);
            train_labels.push_back(labels[order[i]]);
        }
        const ThresholdFit fit = fit_threshold(train_scores, train_labels);

        std::size_t correct = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            const bool predicted = scores[order[i]] < fit.sigma;
            if (predicted == bool(labels[order[i]])) ++correct;
        }
        report.thresholds.push_back(fit.sigma);
        report.fold_accuracies.push_back(double(correct) / double(hi - lo));
    }

    double sum = 0.0;
    for (double a : report.fold_accuracies) sum += a;
    report.mean = sum / double(folds);
    double var = 0.0;
    for (double a : report.fold_accuracies) {
        const double d = a - report.mean;
        var += d * d;
    }
    report.std_dev = std::sqrt(var / double(folds));
    return report;
}

// Scores every case with the model's dissimilarity and cross-validates.
inline CvReport cross_validate(const std::vector<LabeledCase>& cases,
                               const Model& model, const LangPair& pair,
                               std::size_t folds, std::uint64_t seed,
                               bool reverse = false) {
    std::vector<double> scores(cases.size());
    std::vector<char> labels(cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) {
        scores[i] = dissimilarity(model, pair, cases[i].pair, reverse);
        labels[i] = cases[i].label ? 1 : 0;
    }
    return cross_validate_scores(scores, labels, folds, seed);
}

// Splits an alignment set into a training part and a held-out part of
// round(fraction * size) pairs, chosen by seed. Original order is preserved
// within each part.
inline std::pair<AlignmentSet, AlignmentSet> split_alignment(
    const AlignmentSet& set, double fraction, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0)
        throw ConfigError("holdout fraction must be in [0, 1]");
    const std::size_t n = set.pairs.size();
    auto count = static_cast<std::size_t>(std::llround(fraction * double(n)));
    if (count > n) count = n;

    Rng rng(seed);
    const auto order = index_permutation(n, rng, true);
    std::vector<char> held(n, 0);
    for (std::size_t i = 0; i < count; ++i) held[order[i]] = 1;

    AlignmentSet train;
    AlignmentSet holdout;
    train.pair = set.pair;
    holdout.pair = set.pair;
    for (std::size_t i = 0; i < n; ++i)
        (held[i] ? holdout : train).pairs.push_back(set.pairs[i]);
    return {std::move(train), std::move(holdout)};
}

inline void write_cv_report(std::ostream& out, const CvReport& report) {
    for (std::size_t f = 0; f < report.fold_accuracies.size(); ++f)
        out << f << '\t' << format_fixed(report.thresholds[f], 6) << '\t'
            << format_fixed(report.fold_accuracies[f], 4) << '\n';
    out << "MEAN\t" << format_fixed(report.mean, 4) << '\n';
    out << "STD\t" << format_fixed(report.std_dev, 4) << '\n';
}

}  // namespace mkge
