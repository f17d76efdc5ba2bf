#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <vector>

#include "mkge/kg.hpp"
#include "mkge/linalg.hpp"
#include "mkge/rng.hpp"
#include "mkge/types.hpp"

namespace mkge {

// Embedding table for one language: entity and relation vectors stored as
// row-major matrices with one row per vocabulary id.
struct EmbeddingSpace {
    LanguageId language;
    Matrix entities;   // n_entities x k
    Matrix relations;  // n_relations x k

    std::size_t dim() const { return entities.cols; }

    std::span<double> entity(std::uint32_t id) { return entities.row(id); }
    std::span<const double> entity(std::uint32_t id) const {
        return entities.row(id);
    }
    std::span<double> relation(std::uint32_t id) { return relations.row(id); }
    std::span<const double> relation(std::uint32_t id) const {
        return relations.row(id);
    }
};

// Square linear map used to carry vectors across a language pair. The reverse
// direction applies the numerical inverse, which is computed on first use and
// cached until the matrix is written to again.
class TransitMatrix {
public:
    TransitMatrix() = default;
    explicit TransitMatrix(Matrix m) : matrix_(std::move(m)) {
        if (matrix_.rows != matrix_.cols)
            throw NumericError("transit matrix must be square");
    }

    TransitMatrix(const TransitMatrix& other) : matrix_(other.matrix_) {}
    TransitMatrix& operator=(const TransitMatrix& other) {
        if (this != &other) {
            matrix_ = other.matrix_;
            std::unique_lock lock(mutex_);
            inverse_.reset();
        }
        return *this;
    }

    const Matrix& matrix() const { return matrix_; }

    // Mutable access for training updates; any cached inverse is dropped.
    Matrix& mutate() {
        std::unique_lock lock(mutex_);
        inverse_.reset();
        return matrix_;
    }

    std::vector<double> forward(std::span<const double> x) const {
        return matvec(matrix_, x);
    }

    std::vector<double> reverse(std::span<const double> x) const {
        return matvec(inverse(), x);
    }

    const Matrix& inverse() const {
        {
            std::shared_lock lock(mutex_);
            if (inverse_) return *inverse_;
        }
        std::unique_lock lock(mutex_);
        if (!inverse_) inverse_ = std::make_unique<Matrix>(invert(matrix_));
        return *inverse_;
    }

private:
    Matrix matrix_;
    mutable std::shared_mutex mutex_;
    mutable std::unique_ptr<Matrix> inverse_;
};

// Per-pair alignment parameters. Which members are populated depends on the
// variant: Var1/Var2 none, Var3 the shift vectors, Var4 the entity map
// (shared by relations), Var5 both maps.
struct TransitionParams {
    std::optional<std::vector<double>> entity_shift;
    std::optional<std::vector<double>> relation_shift;
    std::optional<TransitMatrix> entity_map;
    std::optional<TransitMatrix> relation_map;
};

struct Model {
    Variant variant = Variant::var1;
    std::size_t k = 0;
    std::map<LanguageId, EmbeddingSpace> spaces;
    std::map<LangPair, TransitionParams> transitions;

    EmbeddingSpace& space(const LanguageId& lang) {
        auto it = spaces.find(lang);
        if (it == spaces.end())
            throw Error("no embedding space for language: " + lang.code);
        return it->second;
    }
    const EmbeddingSpace& space(const LanguageId& lang) const {
        auto it = spaces.find(lang);
        if (it == spaces.end())
            throw Error("no embedding space for language: " + lang.code);
        return it->second;
    }

    const TransitionParams* find_transition(const LangPair& pair) const {
        auto it = transitions.find(pair);
        return it == transitions.end() ? nullptr : &it->second;
    }

    TransitionParams& transition(const LangPair& pair) {
        auto it = transitions.find(pair);
        if (it == transitions.end())
            throw Error("no transition parameters for pair: " +
                        pair.first.code + "-" + pair.second.code);
        return it->second;
    }
    const TransitionParams& transition(const LangPair& pair) const {
        auto it = transitions.find(pair);
        if (it == transitions.end())
            throw Error("no transition parameters for pair: " +
                        pair.first.code + "-" + pair.second.code);
        return it->second;
    }
};

// Rescales v onto the unit sphere; returns false for the zero vector, which
// has no direction. Callers decide the recovery (training re-randomizes,
// initialization resamples).
inline bool try_project_to_sphere(std::span<double> v) {
    const double n = norm_l2(v);
    if (n == 0.0) return false;
    for (double& x : v) x /= n;
    return true;
}

// Throwing form for contexts where a zero vector indicates a bug.
inline void project_to_sphere(std::span<double> v) {
    if (!try_project_to_sphere(v))
        throw NumericError("cannot project the zero vector to the sphere");
}

namespace detail {

// Fills each row with a Gaussian draw normalized to unit length. Resamples
// the (vanishingly unlikely) all-zero draw so every row lands on the sphere.
inline void fill_unit_rows(Matrix& m, Rng& rng) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        auto row = m.row(i);
        do {
            rng.fill_normal(row);
        } while (!try_project_to_sphere(row));
    }
}

}  // namespace detail

// Builds a model with freshly initialized parameters: unit-sphere entity and
// relation vectors per language, and per-pair transition parameters matching
// the variant (zero shifts; random orthogonal maps). Seeding is derived per
// table so the layout of other tables never shifts a table's values.
inline Model init_model(const MultilingualKB& kb, Variant variant,
                        std::size_t k, std::uint64_t seed) {
    if (k == 0) throw ConfigError("embedding dimension must be positive");
    Model model;
    model.variant = variant;
    model.k = k;

    std::uint64_t lang_index = 0;
    for (const auto& [lang, graph] : kb.graphs) {
        EmbeddingSpace space;
        space.language = lang;
        space.entities = Matrix(graph.entities.size(), k);
        space.relations = Matrix(graph.relations.size(), k);
        Rng ent_rng(derive_seed(seed, RngStream::entity_init, lang_index));
        Rng rel_rng(derive_seed(seed, RngStream::relation_init, lang_index));
        detail::fill_unit_rows(space.entities, ent_rng);
        detail::fill_unit_rows(space.relations, rel_rng);
        model.spaces.emplace(lang, std::move(space));
        ++lang_index;
    }

    std::uint64_t pair_index = static_cast<std::uint64_t>(-1);
    for (const auto& [pair, alignment] : kb.alignments) {
        ++pair_index;
        // Transition parameters exist exactly for pairs that can train them.
        if (alignment.pairs.empty()) continue;
        TransitionParams params;
        switch (variant) {
            case Variant::var1:
            case Variant::var2:
                break;
            case Variant::var3:
                params.entity_shift = std::vector<double>(k, 0.0);
                params.relation_shift = std::vector<double>(k, 0.0);
                break;
            case Variant::var4: {
                Rng rng(derive_seed(seed, RngStream::matrix_init, pair_index, 0));
                params.entity_map = TransitMatrix(random_orthogonal(k, rng));
                break;
            }
            case Variant::var5: {
                Rng e_rng(derive_seed(seed, RngStream::matrix_init, pair_index, 0));
                Rng r_rng(derive_seed(seed, RngStream::matrix_init, pair_index, 1));
                params.entity_map = TransitMatrix(random_orthogonal(k, e_rng));
                params.relation_map = TransitMatrix(random_orthogonal(k, r_rng));
                break;
            }
        }
        model.transitions.emplace(pair, std::move(params));
    }
    return model;
}

}  // namespace mkge
