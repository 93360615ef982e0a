#include "dbc/io.hpp"

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "dbc/error.hpp"

namespace dbc {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& tok, const std::string& path, std::size_t lineno) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw DataError(path + ":" + std::to_string(lineno) + ": bad numeric value '" + tok + "'");
    return v;
}

int parse_int(const std::string& tok, const std::string& path, std::size_t lineno) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw DataError(path + ":" + std::to_string(lineno) + ": bad integer '" + tok + "'");
    return v;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

std::uint32_t get_u32_le(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError(path + ": truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

FeatureStore read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ":1: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = split(line, ',');
    if (header.size() < 2 || header[0] != "id")
        throw DataError(path + ":1: expected header 'id,f0,...[,label]'");
    bool has_label = header.back() == "label";
    std::size_t d = header.size() - 1 - (has_label ? 1 : 0);
    if (d == 0) throw DataError(path + ":1: no feature columns");
    for (std::size_t j = 0; j < d; ++j) {
        if (header[1 + j] != "f" + std::to_string(j))
            throw DataError(path + ":1: expected column 'f" + std::to_string(j) + "', got '" +
                            header[1 + j] + "'");
    }

    FeatureStore out;
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tokens = split(line, ',');
        if (tokens.size() != header.size())
            throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(tokens.size()));
        out.sample_ids.push_back(tokens[0]);
        for (std::size_t j = 0; j < d; ++j)
            values.push_back(parse_double(tokens[1 + j], path, lineno));
        if (has_label) out.ground_truth.push_back(parse_int(tokens.back(), path, lineno));
    }
    if (out.sample_ids.empty()) throw DataError(path + ": no data rows");

    out.features.rows = out.sample_ids.size();
    out.features.cols = d;
    out.features.data = std::move(values);
    out.validate();
    return out;
}

void write_csv(const std::string& path, const FeatureStore& store) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "id";
    for (std::size_t j = 0; j < store.dim(); ++j) out << ",f" << j;
    if (store.has_ground_truth()) out << ",label";
    out << "\n";
    for (std::size_t i = 0; i < store.size(); ++i) {
        out << store.sample_ids[i];
        const double* r = store.features.row(i);
        for (std::size_t j = 0; j < store.dim(); ++j) out << ',' << format_double(r[j]);
        if (store.has_ground_truth()) out << ',' << store.ground_truth[i];
        out << "\n";
    }
}

FeatureStore read_dbcf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "DBCF", 4) != 0)
        throw DataError(path + ": missing DBCF magic");
    std::uint32_t n = get_u32_le(in, path);
    std::uint32_t d = get_u32_le(in, path);
    if (n == 0 || d == 0) throw DataError(path + ": zero dimension header");

    std::vector<float> raw(static_cast<std::size_t>(n) * d);
    if (!in.read(reinterpret_cast<char*>(raw.data()),
                 static_cast<std::streamsize>(raw.size() * sizeof(float))))
        throw DataError(path + ": truncated payload (expected " + std::to_string(n) + "x" +
                        std::to_string(d) + " float32)");

    FeatureStore out;
    out.features = Matrix(n, d);
    for (std::size_t i = 0; i < raw.size(); ++i) out.features.data[i] = raw[i];
    out.sample_ids.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) out.sample_ids.push_back(std::to_string(i));
    out.validate();
    return out;
}

void write_dbcf(const std::string& path, const FeatureStore& store) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write("DBCF", 4);
    put_u32_le(out, static_cast<std::uint32_t>(store.size()));
    put_u32_le(out, static_cast<std::uint32_t>(store.dim()));
    std::vector<float> raw(store.features.data.begin(), store.features.data.end());
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(float)));
}

void read_labels_tsv(const std::string& path, FeatureStore& store) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::unordered_map<std::string, std::size_t> row_of;
    row_of.reserve(store.size());
    for (std::size_t i = 0; i < store.sample_ids.size(); ++i) row_of[store.sample_ids[i]] = i;

    std::vector<int> labels(store.size(), -1);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tokens = split(line, '\t');
        if (tokens.size() != 2)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 'id<TAB>label'");
        auto it = row_of.find(tokens[0]);
        if (it == row_of.end())
            throw DataError(path + ":" + std::to_string(lineno) + ": unknown id '" + tokens[0] +
                            "'");
        labels[it->second] = parse_int(tokens[1], path, lineno);
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0)
            throw DataError(path + ": no label for id '" + store.sample_ids[i] + "'");
    }
    store.ground_truth = std::move(labels);
}

void write_labels_tsv(const std::string& path, const std::vector<std::string>& ids,
                      const std::vector<int>& labels) {
    if (ids.size() != labels.size()) throw DataError("id/label count mismatch");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << '\t' << labels[i] << "\n";
}

}  // namespace dbc
