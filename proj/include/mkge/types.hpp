#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>

namespace mkge {

// Language tag, e.g. "en", "fr". Must be non-empty and filename-safe
// ([A-Za-z0-9_.-], not starting with a dot) because model serialization
// derives tensor file names from it.
struct LanguageId {
    std::string code;

    LanguageId() = default;
    explicit LanguageId(std::string c) : code(std::move(c)) {}

    auto operator<=>(const LanguageId&) const = default;
};

inline bool valid_language_code(const std::string& code) {
    if (code.empty() || code[0] == '.') return false;
    for (char c : code) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                  (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

// Unordered language pair stored in canonical order (lexicographically
// smaller code first). All per-pair parameters use this direction as
// "forward"; the reverse direction is derived.
using LangPair = std::pair<LanguageId, LanguageId>;

inline LangPair canonical_pair(const LanguageId& a, const LanguageId& b) {
    return a.code <= b.code ? LangPair{a, b} : LangPair{b, a};
}

// Indexed triple: positions into the owning graph's vocabularies.
struct Triple {
    std::uint32_t head = 0;
    std::uint32_t relation = 0;
    std::uint32_t tail = 0;

    auto operator<=>(const Triple&) const = default;
};

// A pair of triples asserted to express the same fact in two languages.
// `source` indexes into the graph of the pair's first (canonical) language,
// `target` into the second.
struct TriplePair {
    Triple source;
    Triple target;

    auto operator<=>(const TriplePair&) const = default;
};

enum class NormOrder { l1, l2 };

inline std::string to_string(NormOrder n) {
    return n == NormOrder::l1 ? "l1" : "l2";
}

// Model variants. var1/var2 share axes across spaces (identity transition),
// var3 bridges spaces with learned shift vectors, var4/var5 with learned
// linear maps (var5 adds a relation-dedicated map).
enum class Variant : int { var1 = 1, var2 = 2, var3 = 3, var4 = 4, var5 = 5 };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::var1: return "Var1";
        case Variant::var2: return "Var2";
        case Variant::var3: return "Var3";
        case Variant::var4: return "Var4";
        case Variant::var5: return "Var5";
    }
    return "?";
}

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input line (wrong arity, bad number, ...).
class ParseError : public Error {
public:
    ParseError(std::string path, std::size_t line, const std::string& msg)
        : Error(path + ":" + std::to_string(line) + ": " + msg),
          path_(std::move(path)),
          line_(line) {}

    const std::string& path() const { return path_; }
    std::size_t line() const { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

// A surface string that does not resolve in the expected vocabulary.
class ResolutionError : public Error {
public:
    ResolutionError(std::string path, std::size_t line, std::string symbol,
                    const std::string& msg)
        : Error(path + ":" + std::to_string(line) + ": " + msg + ": '" + symbol + "'"),
          path_(std::move(path)),
          line_(line),
          symbol_(std::move(symbol)) {}

    const std::string& path() const { return path_; }
    std::size_t line() const { return line_; }
    const std::string& symbol() const { return symbol_; }

private:
    std::string path_;
    std::size_t line_;
    std::string symbol_;
};

// Invalid run/train configuration; raised before any work starts.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Model directory cannot be read back (missing manifest, version mismatch,
// truncated or mis-sized tensor file).
class LoadError : public Error {
public:
    using Error::Error;
};

// Numerical failure: singular transition matrix, zero-vector projection,
// degenerate input to a decomposition.
class NumericError : public Error {
public:
    using Error::Error;
};

inline Variant parse_variant(const std::string& s) {
    for (Variant v : {Variant::var1, Variant::var2, Variant::var3,
                      Variant::var4, Variant::var5}) {
        if (s == to_string(v)) return v;
    }
    throw ConfigError("unknown variant: '" + s + "' (expected Var1..Var5)");
}

inline NormOrder parse_norm(const std::string& s) {
    if (s == "l1" || s == "L1") return NormOrder::l1;
    if (s == "l2" || s == "L2") return NormOrder::l2;
    throw ConfigError("unknown norm order: '" + s + "' (expected l1 or l2)");
}

// Fixed-precision decimal formatting for report output.
inline std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

}  // namespace mkge
