#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mkge/linalg.hpp"
#include "mkge/model.hpp"
#include "mkge/types.hpp"

namespace mkge {

namespace detail {

inline const TransitMatrix& require_entity_map(const TransitionParams& p) {
    if (!p.entity_map) throw ConfigError("variant requires an entity map");
    return *p.entity_map;
}

inline const TransitMatrix& require_relation_map(const TransitionParams& p) {
    if (!p.relation_map) throw ConfigError("variant requires a relation map");
    return *p.relation_map;
}

inline const std::vector<double>& require_entity_shift(
    const TransitionParams& p) {
    if (!p.entity_shift) throw ConfigError("variant requires an entity shift");
    return *p.entity_shift;
}

inline const std::vector<double>& require_relation_shift(
    const TransitionParams& p) {
    if (!p.relation_shift)
        throw ConfigError("variant requires a relation shift");
    return *p.relation_shift;
}

inline std::vector<double> shifted(std::span<const double> x,
                                   std::span<const double> v, double sign) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + sign * v[i];
    return out;
}

}  // namespace detail

// Carries an entity vector across the pair: forward maps the canonical-first
// language into the second, reverse maps back. Var1/Var2 treat the spaces as
// already calibrated, Var3 translates by the learned shift, Var4/Var5 apply
// the learned linear map (reverse uses its numerical inverse).
inline std::vector<double> transit_entity(const TransitionParams& params,
                                          Variant variant,
                                          std::span<const double> x,
                                          bool reverse = false) {
    switch (variant) {
        case Variant::var1:
        case Variant::var2:
            return std::vector<double>(x.begin(), x.end());
        case Variant::var3:
            return detail::shifted(x, detail::require_entity_shift(params),
                                   reverse ? -1.0 : 1.0);
        case Variant::var4:
        case Variant::var5: {
            const TransitMatrix& m = detail::require_entity_map(params);
            return reverse ? m.reverse(x) : m.forward(x);
        }
    }
    throw Error("unreachable variant");
}

// Same for relation vectors. Var4 reuses the entity map; Var5 has its own.
inline std::vector<double> transit_relation(const TransitionParams& params,
                                            Variant variant,
                                            std::span<const double> x,
                                            bool reverse = false) {
    switch (variant) {
        case Variant::var1:
        case Variant::var2:
            return std::vector<double>(x.begin(), x.end());
        case Variant::var3:
            return detail::shifted(x, detail::require_relation_shift(params),
                                   reverse ? -1.0 : 1.0);
        case Variant::var4: {
            const TransitMatrix& m = detail::require_entity_map(params);
            return reverse ? m.reverse(x) : m.forward(x);
        }
        case Variant::var5: {
            const TransitMatrix& m = detail::require_relation_map(params);
            return reverse ? m.reverse(x) : m.forward(x);
        }
    }
    throw Error("unreachable variant");
}

// Alignment dissonance of one aligned triple pair, evaluated in the pair's
// canonical direction. Summed per-component residual norms; Var1 and Var4
// omit the relation term.
inline double alignment_score(const Model& model, const LangPair& pair,
                              const TriplePair& tp, NormOrder norm) {
    const EmbeddingSpace& src = model.space(pair.first);
    const EmbeddingSpace& tgt = model.space(pair.second);
    const TransitionParams& params = model.transition(pair);
    const Variant v = model.variant;

    const auto h = src.entity(tp.source.head);
    const auto r = src.relation(tp.source.relation);
    const auto t = src.entity(tp.source.tail);
    const auto h2 = tgt.entity(tp.target.head);
    const auto r2 = tgt.relation(tp.target.relation);
    const auto t2 = tgt.entity(tp.target.tail);

    double score = vec_norm(vec_sub(transit_entity(params, v, h), h2), norm) +
                   vec_norm(vec_sub(transit_entity(params, v, t), t2), norm);
    if (v != Variant::var1 && v != Variant::var4)
        score += vec_norm(vec_sub(transit_relation(params, v, r), r2), norm);
    return score;
}

namespace detail {

// Identity transition used for Var1/Var2 pairs that trained no parameters.
inline const TransitionParams& empty_transition() {
    static const TransitionParams params;
    return params;
}

// Resolves the parameters and orientation for transiting from -> to.
struct TransitLookup {
    const TransitionParams* params;
    bool reverse;
};

inline TransitLookup transit_lookup(const Model& model, const LanguageId& from,
                                    const LanguageId& to) {
    if (from == to) throw ConfigError("transit requires two distinct languages");
    const LangPair pair = canonical_pair(from, to);
    const TransitionParams* params = model.find_transition(pair);
    if (!params) {
        if (model.variant == Variant::var1 || model.variant == Variant::var2) {
            params = &empty_transition();
        } else {
            throw ConfigError("model has no transition parameters for pair: " +
                              pair.first.code + "-" + pair.second.code);
        }
    }
    return {params, from == pair.second};
}

}  // namespace detail

// tau applied between arbitrary languages: resolves the canonical pair and
// applies the forward or reverse transition accordingly.
inline std::vector<double> transit_entity_between(const Model& model,
                                                  const LanguageId& from,
                                                  const LanguageId& to,
                                                  std::span<const double> x) {
    const auto lookup = detail::transit_lookup(model, from, to);
    return transit_entity(*lookup.params, model.variant, x, lookup.reverse);
}

inline std::vector<double> transit_relation_between(const Model& model,
                                                    const LanguageId& from,
                                                    const LanguageId& to,
                                                    std::span<const double> x) {
    const auto lookup = detail::transit_lookup(model, from, to);
    return transit_relation(*lookup.params, model.variant, x, lookup.reverse);
}

struct TripleSideGrad {
    std::vector<double> head;
    std::vector<double> relation;
    std::vector<double> tail;
};

// Gradient of alignment_score with respect to every parameter it touches.
// Vector fields are always populated (zero where the variant has no relation
// term); the optionals mirror TransitionParams.
struct AlignmentGrad {
    TripleSideGrad source;
    TripleSideGrad target;
    std::optional<std::vector<double>> entity_shift;
    std::optional<std::vector<double>> relation_shift;
    std::optional<Matrix> entity_map;
    std::optional<Matrix> relation_map;
};

inline AlignmentGrad alignment_grad(const Model& model, const LangPair& pair,
                                    const TriplePair& tp, NormOrder norm) {
    const EmbeddingSpace& src = model.space(pair.first);
    const EmbeddingSpace& tgt = model.space(pair.second);
    const TransitionParams& params = model.transition(pair);
    const Variant v = model.variant;
    const std::size_t k = model.k;

    const auto h = src.entity(tp.source.head);
    const auto r = src.relation(tp.source.relation);
    const auto t = src.entity(tp.source.tail);
    const auto h2 = tgt.entity(tp.target.head);
    const auto r2 = tgt.relation(tp.target.relation);
    const auto t2 = tgt.entity(tp.target.tail);

    const bool has_relation_term = v != Variant::var1 && v != Variant::var4;

    // Ascent directions of each residual term ||tau(x) - y||.
    const auto u_h = residual_direction(
        vec_sub(transit_entity(params, v, h), h2), norm);
    const auto u_t = residual_direction(
        vec_sub(transit_entity(params, v, t), t2), norm);
    std::vector<double> u_r(k, 0.0);
    if (has_relation_term)
        u_r = residual_direction(vec_sub(transit_relation(params, v, r), r2),
                                 norm);

    AlignmentGrad g;
    g.target.head.resize(k);
    g.target.relation.resize(k);
    g.target.tail.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        g.target.head[i] = -u_h[i];
        g.target.relation[i] = -u_r[i];
        g.target.tail[i] = -u_t[i];
    }

    switch (v) {
        case Variant::var1:
        case Variant::var2:
            g.source.head = u_h;
            g.source.relation = u_r;
            g.source.tail = u_t;
            break;
        case Variant::var3: {
            g.source.head = u_h;
            g.source.relation = u_r;
            g.source.tail = u_t;
            // The entity shift appears in both the head and tail terms.
            g.entity_shift = std::vector<double>(k);
            for (std::size_t i = 0; i < k; ++i)
                (*g.entity_shift)[i] = u_h[i] + u_t[i];
            g.relation_shift = u_r;
            break;
        }
        case Variant::var4: {
            const Matrix& me = detail::require_entity_map(params).matrix();
            g.source.head = matvec_transposed(me, u_h);
            g.source.relation = std::vector<double>(k, 0.0);
            g.source.tail = matvec_transposed(me, u_t);
            g.entity_map = Matrix(k, k);
            add_outer(*g.entity_map, u_h, h);
            add_outer(*g.entity_map, u_t, t);
            break;
        }
        case Variant::var5: {
            const Matrix& me = detail::require_entity_map(params).matrix();
            const Matrix& mr = detail::require_relation_map(params).matrix();
            g.source.head = matvec_transposed(me, u_h);
            g.source.relation = matvec_transposed(mr, u_r);
            g.source.tail = matvec_transposed(me, u_t);
            g.entity_map = Matrix(k, k);
            add_outer(*g.entity_map, u_h, h);
            add_outer(*g.entity_map, u_t, t);
            g.relation_map = Matrix(k, k);
            add_outer(*g.relation_map, u_r, r);
            break;
        }
    }
    return g;
}

}  // namespace mkge
