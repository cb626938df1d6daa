#include "binsleuth/features.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "binsleuth/error.hpp"
#include "binsleuth/rng.hpp"

namespace binsleuth {

namespace {

// Pattern index for a byte pair, or -1.
int pattern_index(std::uint8_t a, std::uint8_t b) {
    for (std::size_t i = 0; i < kEndianPatterns.size(); ++i)
        if (kEndianPatterns[i].first == a && kEndianPatterns[i].second == b)
            return static_cast<int>(i);
    return -1;
}

void require_nonempty(const CodeSample& sample) {
    if (sample.bytes.empty()) throw Error(Errc::EmptyCode, "sample contains no code bytes");
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// RFC4180-style quoting for the two text columns.
std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char c : field) {
        if (c == '"') quoted += "\"\"";
        else quoted.push_back(c);
    }
    quoted.push_back('"');
    return quoted;
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

} // namespace

std::array<double, kHistogramDims> byte_histogram(const CodeSample& sample) {
    require_nonempty(sample);
    std::array<std::uint64_t, kHistogramDims> counts{};
    for (std::uint8_t b : sample.bytes) ++counts[b];
    std::array<double, kHistogramDims> hist{};
    const double n = static_cast<double>(sample.bytes.size());
    for (std::size_t v = 0; v < kHistogramDims; ++v)
        hist[v] = static_cast<double>(counts[v]) / n;
    return hist;
}

std::array<double, kEndianDims> endian_counts(const CodeSample& sample) {
    std::array<std::uint64_t, kEndianDims> counts{};
    std::size_t pos = 0;
    for (std::size_t len : sample.section_sizes) {
        for (std::size_t i = 1; i < len; ++i) {
            int p = pattern_index(sample.bytes[pos + i - 1], sample.bytes[pos + i]);
            if (p >= 0) ++counts[p];
        }
        pos += len;
    }
    std::array<double, kEndianDims> result{};
    if (sample.bytes.size() >= 2) {
        const double n = static_cast<double>(sample.bytes.size());
        for (std::size_t i = 0; i < kEndianDims; ++i)
            result[i] = static_cast<double>(counts[i]) / n;
    }
    return result;
}

FeatureVector featurize_full(const CodeSample& sample, std::optional<std::string> label) {
    require_nonempty(sample);
    FeatureVector fv;
    fv.values.resize(kFeatureDims);
    const auto hist = byte_histogram(sample);
    std::copy(hist.begin(), hist.end(), fv.values.begin());
    const auto endian = endian_counts(sample);
    std::copy(endian.begin(), endian.end(), fv.values.begin() + kHistogramDims);
    fv.label = std::move(label);
    fv.source_id = sample.source_id;
    fv.code_len = sample.bytes.size();
    fv.sampled_len = sample.bytes.size();
    return fv;
}

FeatureVector featurize_fragment(const CodeSample& sample, std::size_t max_bytes,
                                 std::uint64_t seed, std::optional<std::string> label) {
    require_nonempty(sample);
    if (max_bytes < 4)
        throw Error(Errc::FragmentTooSmall, "max_bytes must be at least 4");

    const std::size_t n = sample.bytes.size();
    if (max_bytes >= n) {
        // Sampling without replacement exhausts the code; the exact scan is
        // the same vector.
        FeatureVector fv = featurize_full(sample, std::move(label));
        return fv;
    }

    const std::size_t m = max_bytes;
    Rng rng(seed);

    // Histogram over M positions selected by partial Fisher-Yates.
    std::vector<std::uint64_t> indices(n);
    std::iota(indices.begin(), indices.end(), 0);
    std::array<std::uint64_t, kHistogramDims> counts{};
    for (std::size_t i = 0; i < m; ++i) {
        const std::uint64_t j = i + rng.below(n - i);
        std::swap(indices[i], indices[j]);
        ++counts[sample.bytes[indices[i]]];
    }

    FeatureVector fv;
    fv.values.resize(kFeatureDims);
    for (std::size_t v = 0; v < kHistogramDims; ++v)
        fv.values[v] = static_cast<double>(counts[v]) / static_cast<double>(m);

    // Endian counters over M offset draws with replacement. Section start
    // offsets let us reject windows that straddle a boundary.
    if (n >= 2) {
        std::vector<std::size_t> section_start;
        std::size_t pos = 0;
        for (std::size_t len : sample.section_sizes) {
            section_start.push_back(pos);
            pos += len;
        }
        std::array<std::uint64_t, kEndianDims> pattern_hits{};
        for (std::size_t d = 0; d < m; ++d) {
            const std::uint64_t off = rng.below(n - 1);
            int p = pattern_index(sample.bytes[off], sample.bytes[off + 1]);
            if (p < 0) continue;
            auto it = std::upper_bound(section_start.begin(), section_start.end(), off + 1);
            const std::size_t sec_begin = *std::prev(it);
            if (off >= sec_begin) // both bytes inside one section
                ++pattern_hits[p];
        }
        for (std::size_t i = 0; i < kEndianDims; ++i)
            fv.values[kHistogramDims + i] =
                static_cast<double>(pattern_hits[i]) / static_cast<double>(m);
    }

    fv.label = std::move(label);
    fv.source_id = sample.source_id;
    fv.code_len = n;
    fv.sampled_len = m;
    return fv;
}

BigramVector bigram_features(const CodeSample& sample, std::optional<std::string> label) {
    require_nonempty(sample);
    if (sample.bytes.size() < 2)
        throw Error(Errc::TooShort, "need at least 2 code bytes for bigrams");

    std::map<std::uint32_t, std::uint64_t> counts;
    std::uint64_t total = 0;
    std::size_t pos = 0;
    for (std::size_t len : sample.section_sizes) {
        for (std::size_t i = 1; i < len; ++i) {
            const std::uint32_t key =
                static_cast<std::uint32_t>(sample.bytes[pos + i - 1]) * 256u +
                sample.bytes[pos + i];
            ++counts[key];
            ++total;
        }
        pos += len;
    }
    if (total == 0)
        throw Error(Errc::TooShort, "no byte pair lies within a single section");

    BigramVector bv;
    for (const auto& [key, count] : counts)
        bv.counts[key] = static_cast<double>(count) / static_cast<double>(total);
    bv.label = std::move(label);
    bv.source_id = sample.source_id;
    return bv;
}

double opcode_density(double opcode_bits, double avg_instruction_bits) {
    if (!(opcode_bits > 0) || !(avg_instruction_bits > 0) || opcode_bits > avg_instruction_bits)
        throw Error(Errc::DomainError,
                    "need 0 < opcode_bits <= avg_instruction_bits");
    return opcode_bits / avg_instruction_bits;
}

void write_feature_csv(std::ostream& out, const std::vector<FeatureVector>& rows) {
    out << "label,source_id,code_len,sampled_len";
    for (std::size_t i = 0; i < kFeatureDims; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "f%03zu", i);
        out << ',' << buf;
    }
    out << '\n';
    for (const FeatureVector& fv : rows) {
        out << csv_escape(fv.label.value_or("")) << ',' << csv_escape(fv.source_id) << ','
            << fv.code_len << ',' << fv.sampled_len;
        for (double v : fv.values) out << ',' << format_value(v);
        out << '\n';
    }
}

std::vector<FeatureVector> read_feature_csv(std::istream& in) {
    std::vector<FeatureVector> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        auto fields = csv_split(line);
        if (fields.size() != 4 + kFeatureDims)
            throw Error(Errc::IoError,
                        "feature CSV row has " + std::to_string(fields.size()) + " fields");
        FeatureVector fv;
        if (!fields[0].empty()) fv.label = fields[0];
        fv.source_id = fields[1];
        fv.code_len = static_cast<std::size_t>(std::stoull(fields[2]));
        fv.sampled_len = static_cast<std::size_t>(std::stoull(fields[3]));
        fv.values.resize(kFeatureDims);
        for (std::size_t i = 0; i < kFeatureDims; ++i)
            fv.values[i] = std::stod(fields[4 + i]);
        rows.push_back(std::move(fv));
    }
    return rows;
}

void write_bigram_csv(std::ostream& out, const std::vector<BigramVector>& rows) {
    out << "label,source_id,index,value\n";
    for (const BigramVector& bv : rows)
        for (const auto& [key, value] : bv.counts)
            out << csv_escape(bv.label.value_or("")) << ',' << csv_escape(bv.source_id) << ','
                << key << ',' << format_value(value) << '\n';
}

} // namespace binsleuth
