#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "binsleuth/carver.hpp"

namespace binsleuth {

inline constexpr std::size_t kHistogramDims = 256;
inline constexpr std::size_t kEndianDims = 4;
inline constexpr std::size_t kFeatureDims = kHistogramDims + kEndianDims;

// The four endian-heuristic byte pairs, in the fixed feature order.
// Pattern i occupies feature index 256 + i.
struct EndianPattern {
    std::uint8_t first;
    std::uint8_t second;
};
inline constexpr std::array<EndianPattern, kEndianDims> kEndianPatterns = {{
    {0xff, 0xfe},
    {0xfe, 0xff},
    {0x00, 0x01},
    {0x01, 0x00},
}};

// 260 normalized features: indices 0..255 hold the byte-value histogram,
// 256..259 the endian-pattern frequencies.
struct FeatureVector {
    std::vector<double> values; // size kFeatureDims
    std::optional<std::string> label;
    std::string source_id;
    std::size_t code_len = 0;
    std::size_t sampled_len = 0;
};

// Sparse 64k bigram frequencies; key is first_byte * 256 + second_byte.
struct BigramVector {
    std::map<std::uint32_t, double> counts;
    std::optional<std::string> label;
    std::string source_id;
};

// Normalized byte-value histogram: entry v = count(byte == v) / len.
std::array<double, kHistogramDims> byte_histogram(const CodeSample& sample);

// Frequencies of the four endian patterns among stride-1 byte pairs.
// Pairs never span carved-section boundaries; counts are divided by the
// total code byte count. Inputs shorter than 2 bytes yield zeros.
std::array<double, kEndianDims> endian_counts(const CodeSample& sample);

FeatureVector featurize_full(const CodeSample& sample,
                             std::optional<std::string> label = std::nullopt);

// Fragment featurization for size-limited samples; deterministic given
// (sample, max_bytes, seed). With M = min(max_bytes, code_len):
//   - histogram: M positions drawn uniformly without replacement
//     (partial Fisher-Yates), normalized by M;
//   - endian: M offset draws with replacement in [0, code_len-2]; a draw
//     counts when its 2-byte window sits inside one section and matches a
//     pattern; counters are divided by the number of draws.
// When max_bytes >= code_len the sample is exhausted and the result equals
// featurize_full exactly.
FeatureVector featurize_fragment(const CodeSample& sample, std::size_t max_bytes,
                                 std::uint64_t seed,
                                 std::optional<std::string> label = std::nullopt);

// Stride-1 bigram frequencies within each section, normalized by the total
// pair count. Throws TooShort when the sample yields no pairs.
BigramVector bigram_features(const CodeSample& sample,
                             std::optional<std::string> label = std::nullopt);

// Ratio of opcode length to average instruction length, the estimate of how
// strongly opcodes influence code byte values.
double opcode_density(double opcode_bits, double avg_instruction_bits);

// Feature CSV: header `label,source_id,code_len,sampled_len,f000..f259`,
// values printed with 9 significant digits.
void write_feature_csv(std::ostream& out, const std::vector<FeatureVector>& rows);
std::vector<FeatureVector> read_feature_csv(std::istream& in);

// Sparse bigram CSV: `label,source_id,index,value` rows.
void write_bigram_csv(std::ostream& out, const std::vector<BigramVector>& rows);

} // namespace binsleuth
