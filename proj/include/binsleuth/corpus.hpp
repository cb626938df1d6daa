#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "binsleuth/carver.hpp"
#include "binsleuth/dataset.hpp"
#include "binsleuth/features.hpp"

namespace binsleuth {

enum class Endian { Big, Little };
enum class CarveMode { Elf, Raw };

struct ManifestEntry {
    std::string path;
    std::string label;
    Endian endian = Endian::Little; // metadata only, never a feature
    int wordsize = 32;              // bits, metadata only
    CarveMode mode = CarveMode::Elf;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
};

// JSON lines, one entry per line:
//   {"path": "...", "label": "...", "endian": "big|little", "wordsize": 32, "mode": "elf|raw"}
// Blank lines are skipped. Throws MalformedManifest on bad JSON, missing or
// invalid fields, and duplicate paths. Missing files are not checked here.
DatasetManifest load_manifest(std::istream& in);
DatasetManifest load_manifest_file(const std::string& path);

struct BuildOptions {
    std::optional<std::size_t> fragment_bytes; // unset = full-sample features
    std::uint64_t seed = 0;                    // per-file fragment seeds derive from this
    int jobs = 1;
};

struct SkippedFile {
    std::string path;
    std::string reason;
};

struct FeaturizeResult {
    std::vector<FeatureVector> features; // manifest order, failures removed
    std::vector<SkippedFile> skipped;
};

struct BuildResult {
    Dataset data;
    std::vector<SkippedFile> skipped;
};

// Reads, carves, and featurizes every manifest file. Failures land in the
// skip report instead of aborting; AllFilesFailed only if nothing survives.
// Entries with an empty label produce unlabeled vectors. Deterministic given
// (manifest, options), regardless of jobs.
FeaturizeResult featurize_manifest(const DatasetManifest& manifest,
                                   const BuildOptions& options = {});

// featurize_manifest plus dataset assembly: one labeled instance per
// readable file, classes ordered by first appearance.
BuildResult build_dataset(const DatasetManifest& manifest, const BuildOptions& options = {});

struct AlphabetEntry {
    std::uint8_t prefix = 0; // byte whose top opcode bits are kept
    double prob = 0.0;
};

struct ImmediateEntry {
    std::uint16_t value = 0;
    double weight = 0.0;
};

// {small constants, 0xFFFE-rooted address}: between them these exercise all
// four endian heuristic patterns once byte order is applied.
std::vector<ImmediateEntry> default_immediate_pool();

struct SynthIsaSpec {
    std::string name;
    int instruction_len_bytes = 4; // 2, 4, or 8
    int opcode_bits = 8;           // <= 8 * instruction_len_bytes
    std::vector<AlphabetEntry> opcode_alphabet;
    Endian endianness = Endian::Little;
    double immediate_prob = 0.0; // chance an instruction carries an immediate
    std::vector<ImmediateEntry> immediate_pool = default_immediate_pool();
};

struct SynthFile {
    CodeSample sample;
    std::string label;
    Endian endian = Endian::Little;
    int wordsize = 32;
};

// Streams of fixed-length instructions: every byte starts as uniform noise,
// the leading byte then takes its top opcode bits from the skewed alphabet,
// and with immediate_prob the final two bytes become a 16-bit pool value in
// the spec's byte order. Per-file seeds derive from the generation
// parameters except name and endianness, so endian twins replay identical
// draw streams and their byte histograms match exactly.
std::vector<SynthFile> gen_synth_corpus(const std::vector<SynthIsaSpec>& specs,
                                        int files_per_spec, std::size_t bytes_per_file,
                                        std::uint64_t seed);

// Big and little variants of one spec, names suffixed -be / -le. Existing
// twin suffixes on the base name are stripped first, so the call is
// idempotent up to naming.
std::pair<SynthIsaSpec, SynthIsaSpec> make_twin_specs(const SynthIsaSpec& base);

// Six separable ISAs plus the procyon endian-twin pair.
std::vector<SynthIsaSpec> default_synth_specs();

// JSON array of spec objects, e.g.
//   [{"name": "vega", "instruction_len_bytes": 4, "opcode_bits": 8,
//     "opcode_alphabet": [{"prefix": 224, "prob": 1.0}],
//     "endianness": "little", "immediate_prob": 0.1,
//     "immediate_pool": [{"value": 1, "weight": 1.0}]}]
// immediate_pool may be omitted for the default pool. Throws BadSpec.
std::vector<SynthIsaSpec> load_synth_specs(std::istream& in);

// Writes one .bin per file plus manifest.jsonl (mode raw) into dir.
void write_synth_corpus(const std::vector<SynthFile>& corpus, const std::string& dir);

} // namespace binsleuth
