#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mkge/kg.hpp"
#include "mkge/linalg.hpp"
#include "mkge/model.hpp"
#include "mkge/types.hpp"

namespace mkge {

// Model directory layout: a line-oriented `key<TAB>value` manifest plus one
// binary file per tensor. Tensors are row-major little-endian 32-bit floats;
// training math is 64-bit, so saving truncates and loading promotes.
inline constexpr const char* kManifestName = "manifest.tsv";
inline constexpr int kFormatVersion = 1;

namespace detail {

inline void write_f32_le(std::ostream& out, double value) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
    const char bytes[4] = {
        static_cast<char>(bits & 0xFF),
        static_cast<char>((bits >> 8) & 0xFF),
        static_cast<char>((bits >> 16) & 0xFF),
        static_cast<char>((bits >> 24) & 0xFF),
    };
    out.write(bytes, 4);
}

inline double read_f32_le(const unsigned char* p) {
    const std::uint32_t bits = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                               (std::uint32_t(p[2]) << 16) |
                               (std::uint32_t(p[3]) << 24);
    return static_cast<double>(std::bit_cast<float>(bits));
}

inline void write_tensor_file(const std::filesystem::path& path,
                              const std::vector<double>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write tensor file: " + path.string());
    for (double v : data) write_f32_le(out, v);
    if (!out) throw Error("failed writing tensor file: " + path.string());
}

inline std::vector<double> read_tensor_file(const std::filesystem::path& path,
                                            std::size_t rows,
                                            std::size_t cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("missing tensor file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    const std::size_t expected = rows * cols * 4;
    if (bytes.size() != expected)
        throw LoadError("tensor file " + path.string() + " holds " +
                        std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(expected));
    std::vector<double> data(rows * cols);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = read_f32_le(p + 4 * i);
    return data;
}

// Joins value subfields with single spaces (manifest values are
// space-separated; keys and values are tab-separated).
inline std::string join_fields(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ' ';
        out += fields[i];
    }
    return out;
}

inline std::vector<std::string> split_spaces(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

struct TensorEntry {
    std::vector<std::string> fields;  // role, args..., rows, cols, filename
};

inline std::string tensor_filename(std::size_t index, const std::string& role,
                                   const std::vector<std::string>& langs) {
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%04zu", index);
    std::string name = std::string(prefix) + "_" + role;
    for (const auto& l : langs) name += "_" + l;
    return name + ".f32";
}

}  // namespace detail

inline void save_model(const Model& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    std::vector<std::string> lines;
    lines.push_back(std::string("format_version\t") +
                    std::to_string(kFormatVersion));
    lines.push_back("variant\t" + to_string(model.variant));
    lines.push_back("k\t" + std::to_string(model.k));
    for (const auto& [lang, space] : model.spaces)
        lines.push_back("language\t" +
                        detail::join_fields({lang.code,
                                             std::to_string(space.entities.rows),
                                             std::to_string(space.relations.rows)}));
    for (const auto& [pair, params] : model.transitions)
        lines.push_back("pair\t" +
                        detail::join_fields({pair.first.code, pair.second.code}));

    // Tensor files are numbered in manifest order so names never collide.
    std::size_t index = 0;
    auto emit = [&](const std::string& role,
                    const std::vector<std::string>& langs, std::size_t rows,
                    std::size_t cols, const std::vector<double>& data) {
        const std::string file = detail::tensor_filename(index++, role, langs);
        std::vector<std::string> fields{role};
        for (const auto& l : langs) fields.push_back(l);
        fields.push_back(std::to_string(rows));
        fields.push_back(std::to_string(cols));
        fields.push_back(file);
        lines.push_back("tensor\t" + detail::join_fields(fields));
        detail::write_tensor_file(dir / file, data);
    };

    for (const auto& [lang, space] : model.spaces) {
        emit("entities", {lang.code}, space.entities.rows, space.entities.cols,
             space.entities.data);
        emit("relations", {lang.code}, space.relations.rows,
             space.relations.cols, space.relations.data);
    }
    for (const auto& [pair, params] : model.transitions) {
        const std::vector<std::string> langs{pair.first.code, pair.second.code};
        if (params.entity_shift)
            emit("entity_shift", langs, 1, params.entity_shift->size(),
                 *params.entity_shift);
        if (params.relation_shift)
            emit("relation_shift", langs, 1, params.relation_shift->size(),
                 *params.relation_shift);
        if (params.entity_map)
            emit("entity_map", langs, params.entity_map->matrix().rows,
                 params.entity_map->matrix().cols,
                 params.entity_map->matrix().data);
        if (params.relation_map)
            emit("relation_map", langs, params.relation_map->matrix().rows,
                 params.relation_map->matrix().cols,
                 params.relation_map->matrix().data);
    }

    std::ofstream out(dir / kManifestName, std::ios::binary);
    if (!out) throw Error("cannot write manifest in " + dir.string());
    for (const auto& line : lines) out << line << '\n';
    if (!out) throw Error("failed writing manifest in " + dir.string());
}

inline Model load_model(const std::filesystem::path& dir) {
    const auto manifest_path = dir / kManifestName;
    if (!std::filesystem::exists(manifest_path))
        throw LoadError("missing manifest: " + manifest_path.string());

    Model model;
    bool version_seen = false;
    bool variant_seen = false;
    bool k_seen = false;
    std::map<LanguageId, std::pair<std::size_t, std::size_t>> lang_counts;
    std::vector<LangPair> pairs;
    std::vector<detail::TensorEntry> tensors;

    const auto lines = detail::read_lines(manifest_path.string());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        const auto kv = detail::split_tabs(line);
        if (kv.size() != 2)
            throw LoadError("manifest line " + std::to_string(i + 1) +
                            ": expected key<TAB>value");
        const std::string& key = kv[0];
        const auto fields = detail::split_spaces(kv[1]);

        if (key == "format_version") {
            if (kv[1] != std::to_string(kFormatVersion))
                throw LoadError("unsupported format version: " + kv[1]);
            version_seen = true;
        } else if (key == "variant") {
            model.variant = parse_variant(kv[1]);
            variant_seen = true;
        } else if (key == "k") {
            model.k = static_cast<std::size_t>(std::stoull(kv[1]));
            if (model.k == 0) throw LoadError("manifest k must be positive");
            k_seen = true;
        } else if (key == "language") {
            if (fields.size() != 3)
                throw LoadError("manifest language entry needs 3 fields");
            LanguageId lang{fields[0]};
            if (lang_counts.count(lang))
                throw LoadError("duplicate language in manifest: " + lang.code);
            lang_counts[lang] = {std::stoull(fields[1]), std::stoull(fields[2])};
        } else if (key == "pair") {
            if (fields.size() != 2)
                throw LoadError("manifest pair entry needs 2 fields");
            pairs.push_back(LangPair{LanguageId{fields[0]}, LanguageId{fields[1]}});
        } else if (key == "tensor") {
            tensors.push_back(detail::TensorEntry{fields});
        } else {
            throw LoadError("unknown manifest key: " + key);
        }
    }
    if (!version_seen) throw LoadError("manifest missing format_version");
    if (!variant_seen) throw LoadError("manifest missing variant");
    if (!k_seen) throw LoadError("manifest missing k");

    for (const auto& [lang, counts] : lang_counts) {
        EmbeddingSpace space;
        space.language = lang;
        space.entities = Matrix(counts.first, model.k);
        space.relations = Matrix(counts.second, model.k);
        model.spaces.emplace(lang, std::move(space));
    }
    for (const LangPair& p : pairs) {
        if (!model.spaces.count(p.first) || !model.spaces.count(p.second))
            throw LoadError("manifest pair references unknown language");
        if (!(p.first.code < p.second.code))
            throw LoadError("manifest pair not in canonical order");
        model.transitions.emplace(p, TransitionParams{});
    }

    // Which tensors were filled, to reject both duplicates and omissions.
    std::map<std::string, bool> filled;

    for (const auto& entry : tensors) {
        const auto& f = entry.fields;
        if (f.size() < 5) throw LoadError("manifest tensor entry too short");
        const std::string& role = f[0];
        const std::string& file = f.back();
        const std::size_t cols = std::stoull(f[f.size() - 2]);
        const std::size_t rows = std::stoull(f[f.size() - 3]);
        const std::vector<std::string> langs(f.begin() + 1, f.end() - 3);

        auto mark = [&](const std::string& id) {
            if (filled[id]) throw LoadError("duplicate tensor: " + id);
            filled[id] = true;
        };

        if (role == "entities" || role == "relations") {
            if (langs.size() != 1)
                throw LoadError("tensor " + role + " needs 1 language");
            auto it = model.spaces.find(LanguageId{langs[0]});
            if (it == model.spaces.end())
                throw LoadError("tensor references unknown language: " + langs[0]);
            Matrix& target = role == "entities" ? it->second.entities
                                                : it->second.relations;
            if (rows != target.rows || cols != target.cols)
                throw LoadError("tensor " + role + " " + langs[0] +
                                " dimensions disagree with manifest counts");
            target.data = detail::read_tensor_file(dir / file, rows, cols);
            mark(role + ":" + langs[0]);
        } else if (role == "entity_shift" || role == "relation_shift" ||
                   role == "entity_map" || role == "relation_map") {
            if (langs.size() != 2)
                throw LoadError("tensor " + role + " needs 2 languages");
            const LangPair p{LanguageId{langs[0]}, LanguageId{langs[1]}};
            auto it = model.transitions.find(p);
            if (it == model.transitions.end())
                throw LoadError("tensor references unknown pair: " + langs[0] +
                                " " + langs[1]);
            const bool is_shift = role == "entity_shift" || role == "relation_shift";
            if (is_shift && (rows != 1 || cols != model.k))
                throw LoadError("tensor " + role + " must be 1 x k");
            if (!is_shift && (rows != model.k || cols != model.k))
                throw LoadError("tensor " + role + " must be k x k");
            auto data = detail::read_tensor_file(dir / file, rows, cols);
            if (role == "entity_shift") {
                it->second.entity_shift = std::move(data);
            } else if (role == "relation_shift") {
                it->second.relation_shift = std::move(data);
            } else {
                Matrix m(rows, cols);
                m.data = std::move(data);
                if (role == "entity_map")
                    it->second.entity_map = TransitMatrix(std::move(m));
                else
                    it->second.relation_map = TransitMatrix(std::move(m));
            }
            mark(role + ":" + langs[0] + ":" + langs[1]);
        } else {
            throw LoadError("unknown tensor role: " + role);
        }
    }

    for (const auto& [lang, space] : model.spaces) {
        if (!filled["entities:" + lang.code] ||
            !filled["relations:" + lang.code])
            throw LoadError("manifest missing tensors for language: " +
                            lang.code);
    }
    for (const auto& [pair, params] : model.transitions) {
        const std::string id = pair.first.code + ":" + pair.second.code;
        const bool need_shifts = model.variant == Variant::var3;
        const bool need_emap =
            model.variant == Variant::var4 || model.variant == Variant::var5;
        const bool need_rmap = model.variant == Variant::var5;
        if (need_shifts && (!params.entity_shift || !params.relation_shift))
            throw LoadError("manifest missing shift tensors for pair: " + id);
        if (need_emap && !params.entity_map)
            throw LoadError("manifest missing entity map for pair: " + id);
        if (need_rmap && !params.relation_map)
            throw LoadError("manifest missing relation map for pair: " + id);
    }
    return model;
}

}  // namespace mkge
