#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mkge/linalg.hpp"
#include "mkge/model.hpp"
#include "mkge/types.hpp"

namespace mkge {

namespace detail {

// d = h + r - t for one triple.
inline std::vector<double> triple_displacement(const EmbeddingSpace& space,
                                               const Triple& t) {
    const auto h = space.entity(t.head);
    const auto r = space.relation(t.relation);
    const auto tl = space.entity(t.tail);
    std::vector<double> d(h.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = h[i] + r[i] - tl[i];
    return d;
}

}  // namespace detail

// Dissonance of one triple under its language's embedding: ||h + r - t||.
inline double triple_score(const EmbeddingSpace& space, const Triple& t,
                           NormOrder norm) {
    const auto d = detail::triple_displacement(space, t);
    return vec_norm(d, norm);
}

// Gradient of triple_score with respect to each participating vector. The
// head and relation gradients coincide, so only two arrays are stored.
struct TripleGrad {
    std::vector<double> head;  // also d(score)/d(relation)
    std::vector<double> tail;  // = -head
};

inline TripleGrad triple_grad(const EmbeddingSpace& space, const Triple& t,
                              NormOrder norm) {
    const auto d = detail::triple_displacement(space, t);
    TripleGrad g;
    g.head = residual_direction(d, norm);
    g.tail.resize(g.head.size());
    for (std::size_t i = 0; i < g.head.size(); ++i) g.tail[i] = -g.head[i];
    return g;
}

}  // namespace mkge
