#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkbo/pool.hpp"

namespace dkbo {

enum class PoolFormat { csv, binary };

inline PoolFormat parse_pool_format(std::string_view s) {
    if (s == "csv") return PoolFormat::csv;
    if (s == "binary" || s == "bin") return PoolFormat::binary;
    throw ConfigError("unknown pool format '" + std::string(s) + "' (expected csv or binary)");
}

inline std::string to_string(PoolFormat f) { return f == PoolFormat::csv ? "csv" : "binary"; }

/// Guesses the format from the file extension; anything but .csv is binary.
inline PoolFormat format_from_path(const std::filesystem::path& p) {
    return p.extension() == ".csv" ? PoolFormat::csv : PoolFormat::binary;
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline double parse_double(std::string_view tok, std::size_t row, std::size_t col) {
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw FormatError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                          ": cannot parse '" + std::string(tok) + "' as a number");
    return v;
}

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

template <typename T>
void put_le(std::string& buf, T value) {
    using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
              std::conditional_t<sizeof(T) == 2, std::uint16_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
    auto bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t& offset) {
    using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
              std::conditional_t<sizeof(T) == 2, std::uint16_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
    if (offset + sizeof(T) > bytes.size()) throw FormatError("unexpected end of binary pool file");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        bits |= static_cast<U>(static_cast<std::uint8_t>(bytes[offset + i])) << (8 * i);
    offset += sizeof(T);
    return std::bit_cast<T>(bits);
}

inline constexpr char kMagic[4] = {'G', 'L', 'B', 'O'};
inline constexpr std::uint16_t kBinaryVersion = 1;

} // namespace detail

/// Parses the CSV pool format: header `id,e0,...,e{d-1}[,y]`.
inline CandidatePool parse_pool_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    {
        std::size_t start = 0;
        while (start <= text.size()) {
            auto pos = text.find('\n', start);
            std::string_view line =
                text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.push_back(line);
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw FormatError("empty CSV pool file");

    auto header = detail::split_commas(lines[0]);
    if (header.size() < 2 || header[0] != "id")
        throw FormatError("CSV header must start with 'id' followed by embedding columns");
    const bool has_y = header.back() == "y";
    const std::size_t d = header.size() - 1 - (has_y ? 1 : 0);
    if (d < 1) throw FormatError("CSV header declares no embedding columns");
    for (std::size_t j = 0; j < d; ++j) {
        if (header[j + 1] != "e" + std::to_string(j))
            throw FormatError("CSV header column " + std::to_string(j + 1) + " must be 'e" +
                              std::to_string(j) + "', got '" + std::string(header[j + 1]) + "'");
    }

    const std::size_t n = lines.size() - 1;
    if (n == 0) throw FormatError("CSV pool file has a header but no rows");
    std::vector<std::string> ids;
    ids.reserve(n);
    Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    Vector y(has_y ? static_cast<Eigen::Index>(n) : 0);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t row = r + 1;
        auto fields = detail::split_commas(lines[row]);
        if (fields.size() != header.size()) {
            const std::size_t got = fields.size() - 1 - (has_y ? 1 : 0);
            throw FormatError("row " + std::to_string(row) + ": expected " + std::to_string(d) +
                              " embedding values, found " + std::to_string(got));
        }
        if (fields[0].empty()) throw FormatError("row " + std::to_string(row) + ": empty id");
        ids.emplace_back(fields[0]);
        for (std::size_t j = 0; j < d; ++j)
            X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
                detail::parse_double(fields[j + 1], row, j + 1);
        if (has_y) y(static_cast<Eigen::Index>(r)) = detail::parse_double(fields.back(), row, d + 1);
    }
    std::optional<Vector> labels;
    if (has_y) labels = std::move(y);
    return CandidatePool(std::move(ids), std::move(X), std::move(labels));
}

inline std::string serialize_pool_csv(const CandidatePool& pool) {
    std::string out = "id";
    for (std::size_t j = 0; j < pool.dim(); ++j) out += ",e" + std::to_string(j);
    if (pool.labeled()) out += ",y";
    out += '\n';
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& id = pool.ids()[i];
        if (id.find_first_of(",\r\n") != std::string::npos)
            throw DataError("id '" + id + "' cannot be written to CSV (contains a separator)");
        out += id;
        for (std::size_t j = 0; j < pool.dim(); ++j) {
            out += ',';
            out += detail::format_double(pool.X()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        if (pool.labeled()) {
            out += ',';
            out += detail::format_double(pool.y()(static_cast<Eigen::Index>(i)));
        }
        out += '\n';
    }
    return out;
}

/// Binary layout: magic `GLBO`, u16 version, u64 n, u64 d, u8 flags (bit0 = labels),
/// n*d little-endian float32 row-major, n float64 labels when flagged, then a
/// UTF-8 JSON trailer {ids, meta} running to end of file.
inline std::string serialize_pool_binary(const CandidatePool& pool) {
    std::string buf(detail::kMagic, detail::kMagic + 4);
    detail::put_le<std::uint16_t>(buf, detail::kBinaryVersion);
    detail::put_le<std::uint64_t>(buf, pool.size());
    detail::put_le<std::uint64_t>(buf, pool.dim());
    detail::put_le<std::uint8_t>(buf, pool.labeled() ? 1u : 0u);
    buf.reserve(buf.size() + pool.size() * pool.dim() * 4 + pool.size() * 8);
    for (Eigen::Index i = 0; i < pool.X().rows(); ++i)
        for (Eigen::Index j = 0; j < pool.X().cols(); ++j)
            detail::put_le<float>(buf, static_cast<float>(pool.X()(i, j)));
    if (pool.labeled())
        for (Eigen::Index i = 0; i < pool.y().size(); ++i) detail::put_le<double>(buf, pool.y()(i));
    nlohmann::json trailer;
    trailer["ids"] = pool.ids();
    trailer["meta"] = pool.meta();
    buf += trailer.dump();
    return buf;
}

inline CandidatePool parse_pool_binary(std::string_view bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), detail::kMagic, 4) != 0)
        throw FormatError("not a binary pool file (bad magic)");
    std::size_t off = 4;
    const auto version = detail::get_le<std::uint16_t>(bytes, off);
    if (version != detail::kBinaryVersion)
        throw FormatError("unsupported binary pool version " + std::to_string(version));
    const auto n = detail::get_le<std::uint64_t>(bytes, off);
    const auto d = detail::get_le<std::uint64_t>(bytes, off);
    const auto flags = detail::get_le<std::uint8_t>(bytes, off);
    if (flags & ~1u) throw FormatError("unknown flag bits in binary pool header");
    const bool has_y = flags & 1u;
    const std::size_t remaining = bytes.size() - off;
    if (n == 0 || d == 0) throw FormatError("binary pool header declares an empty pool");
    if (d > remaining / 4 || n > remaining / (4 * d) ||
        n * d * 4 + (has_y ? n * 8 : 0) > remaining)
        throw FormatError("binary pool payload shorter than header dimensions");

    Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::uint64_t i = 0; i < n; ++i)
        for (std::uint64_t j = 0; j < d; ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = detail::get_le<float>(bytes, off);
    std::optional<Vector> y;
    if (has_y) {
        Vector v(static_cast<Eigen::Index>(n));
        for (std::uint64_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = detail::get_le<double>(bytes, off);
        y = std::move(v);
    }
    nlohmann::json trailer;
    try {
        trailer = nlohmann::json::parse(bytes.substr(off));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("binary pool trailer is not valid JSON: ") + e.what());
    }
    if (!trailer.is_object() || !trailer.contains("ids") || !trailer["ids"].is_array())
        throw FormatError("binary pool trailer lacks an 'ids' array");
    std::vector<std::string> ids;
    Meta meta;
    try {
        ids = trailer["ids"].get<std::vector<std::string>>();
        if (trailer.contains("meta")) meta = trailer["meta"].get<Meta>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("binary pool trailer has wrong types: ") + e.what());
    }
    if (ids.size() != n)
        throw FormatError("binary pool trailer lists " + std::to_string(ids.size()) + " ids for " +
                          std::to_string(n) + " rows");
    return CandidatePool(std::move(ids), std::move(X), std::move(y), std::move(meta));
}

inline CandidatePool load_pool(const std::filesystem::path& path, PoolFormat format) {
    const std::string bytes = detail::read_file(path);
    return format == PoolFormat::csv ? parse_pool_csv(bytes) : parse_pool_binary(bytes);
}

inline CandidatePool load_pool(const std::filesystem::path& path) {
    return load_pool(path, format_from_path(path));
}

inline void save_pool(const CandidatePool& pool, const std::filesystem::path& path, PoolFormat format) {
    detail::write_file(path, format == PoolFormat::csv ? serialize_pool_csv(pool)
                                                       : serialize_pool_binary(pool));
}

} // namespace dkbo
