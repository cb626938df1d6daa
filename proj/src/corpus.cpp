#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binsleuth/corpus.hpp"
#include "binsleuth/error.hpp"
#include "binsleuth/features.hpp"
#include "binsleuth/parallel.hpp"
#include "binsleuth/rng.hpp"

namespace binsleuth {

namespace {

using nlohmann::json;

Endian parse_endian(const std::string& text, std::size_t line_no) {
    if (text == "big") return Endian::Big;
    if (text == "little") return Endian::Little;
    throw Error(Errc::MalformedManifest,
                "line " + std::to_string(line_no) + ": endian must be big or little");
}

CarveMode parse_mode(const std::string& text, std::size_t line_no) {
    if (text == "elf") return CarveMode::Elf;
    if (text == "raw") return CarveMode::Raw;
    throw Error(Errc::MalformedManifest,
                "line " + std::to_string(line_no) + ": mode must be elf or raw");
}

const char* endian_name(Endian e) { return e == Endian::Big ? "big" : "little"; }

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Everything that shapes file content except the name and byte order; endian
// twins therefore derive the same per-file seed and replay the same draws.
std::string content_key(const SynthIsaSpec& spec, int file_idx) {
    std::ostringstream key;
    key << "len=" << spec.instruction_len_bytes << ";bits=" << spec.opcode_bits << ";alpha=";
    for (const AlphabetEntry& a : spec.opcode_alphabet)
        key << static_cast<int>(a.prefix) << ':' << fmt_double(a.prob) << ',';
    key << ";imm=" << fmt_double(spec.immediate_prob) << ";pool=";
    for (const ImmediateEntry& p : spec.immediate_pool)
        key << p.value << ':' << fmt_double(p.weight) << ',';
    key << ";file=" << file_idx;
    return key.str();
}

void validate_spec(const SynthIsaSpec& spec) {
    if (spec.name.empty()) throw Error(Errc::BadSpec, "spec name must not be empty");
    const int len = spec.instruction_len_bytes;
    if (len != 2 && len != 4 && len != 8)
        throw Error(Errc::BadSpec, spec.name + ": instruction length must be 2, 4, or 8 bytes");
    if (spec.opcode_bits < 1 || spec.opcode_bits > 8 * len)
        throw Error(Errc::BadSpec, spec.name + ": opcode bits must be in [1, 8*length]");
    if (spec.opcode_alphabet.empty())
        throw Error(Errc::BadSpec, spec.name + ": opcode alphabet must not be empty");
    double alpha_sum = 0.0;
    std::set<int> seen;
    for (const AlphabetEntry& a : spec.opcode_alphabet) {
        if (a.prob <= 0) throw Error(Errc::BadSpec, spec.name + ": alphabet probability <= 0");
        if (!seen.insert(a.prefix).second)
            throw Error(Errc::BadSpec, spec.name + ": duplicate alphabet prefix");
        alpha_sum += a.prob;
    }
    if (std::abs(alpha_sum - 1.0) > 1e-9)
        throw Error(Errc::BadSpec, spec.name + ": alphabet probabilities must sum to 1");
    if (spec.immediate_prob < 0 || spec.immediate_prob > 1)
        throw Error(Errc::BadSpec, spec.name + ": immediate_prob must be in [0,1]");
    if (spec.immediate_prob > 0) {
        if (len < 4)
            throw Error(Errc::BadSpec,
                        spec.name + ": immediates need at least 4-byte instructions");
        if (spec.immediate_pool.empty())
            throw Error(Errc::BadSpec, spec.name + ": immediate pool must not be empty");
        double pool_sum = 0.0;
        std::set<int> pool_seen;
        for (const ImmediateEntry& p : spec.immediate_pool) {
            if (p.weight <= 0) throw Error(Errc::BadSpec, spec.name + ": pool weight <= 0");
            if (!pool_seen.insert(p.value).second)
                throw Error(Errc::BadSpec, spec.name + ": duplicate pool value");
            pool_sum += p.weight;
        }
        if (std::abs(pool_sum - 1.0) > 1e-9)
            throw Error(Errc::BadSpec, spec.name + ": pool weights must sum to 1");
    }
}

std::vector<std::uint8_t> generate_file(const SynthIsaSpec& spec, std::size_t bytes_per_file,
                                        Rng& rng) {
    std::vector<std::uint8_t> bytes(bytes_per_file);
    const int len = spec.instruction_len_bytes;
    const int top_bits = std::min(spec.opcode_bits, 8);
    const std::uint8_t mask = static_cast<std::uint8_t>(0xFF << (8 - top_bits));

    for (std::size_t at = 0; at < bytes_per_file; at += len) {
        for (int b = 0; b < len; ++b)
            bytes[at + b] = static_cast<std::uint8_t>(rng.below(256));

        const double pick = rng.unit();
        double acc = 0.0;
        std::uint8_t prefix = spec.opcode_alphabet.back().prefix;
        for (const AlphabetEntry& a : spec.opcode_alphabet) {
            acc += a.prob;
            if (pick < acc) {
                prefix = a.prefix;
                break;
            }
        }
        bytes[at] = static_cast<std::uint8_t>((prefix & mask) | (bytes[at] & ~mask));

        if (spec.immediate_prob > 0 && rng.unit() < spec.immediate_prob) {
            const double ipick = rng.unit();
            double iacc = 0.0;
            std::uint16_t value = spec.immediate_pool.back().value;
            for (const ImmediateEntry& p : spec.immediate_pool) {
                iacc += p.weight;
                if (ipick < iacc) {
                    value = p.value;
                    break;
                }
            }
            const auto hi = static_cast<std::uint8_t>(value >> 8);
            const auto lo = static_cast<std::uint8_t>(value & 0xFF);
            if (spec.endianness == Endian::Big) {
                bytes[at + len - 2] = hi;
                bytes[at + len - 1] = lo;
            } else {
                bytes[at + len - 2] = lo;
                bytes[at + len - 1] = hi;
            }
        }
    }
    return bytes;
}

} // namespace

DatasetManifest load_manifest(std::istream& in) {
    DatasetManifest manifest;
    std::set<std::string> paths;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(Errc::MalformedManifest,
                        "line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            if (!j.is_object())
                throw Error(Errc::MalformedManifest,
                            "line " + std::to_string(line_no) + ": entry is not an object");
            ManifestEntry entry;
            entry.path = j.at("path").get<std::string>();
            entry.label = j.at("label").get<std::string>();
            entry.endian = parse_endian(j.at("endian").get<std::string>(), line_no);
            entry.wordsize = j.at("wordsize").get<int>();
            entry.mode = parse_mode(j.at("mode").get<std::string>(), line_no);
            if (entry.path.empty() || entry.label.empty())
                throw Error(Errc::MalformedManifest,
                            "line " + std::to_string(line_no) + ": path and label must be set");
            if (entry.wordsize <= 0)
                throw Error(Errc::MalformedManifest,
                            "line " + std::to_string(line_no) + ": wordsize must be positive");
            if (!paths.insert(entry.path).second)
                throw Error(Errc::MalformedManifest,
                            "line " + std::to_string(line_no) + ": duplicate path " + entry.path);
            manifest.entries.push_back(std::move(entry));
        } catch (const json::exception& e) {
            throw Error(Errc::MalformedManifest,
                        "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return manifest;
}

DatasetManifest load_manifest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path);
    return load_manifest(in);
}

FeaturizeResult featurize_manifest(const DatasetManifest& manifest, const BuildOptions& options) {
    if (manifest.entries.empty())
        throw Error(Errc::EmptyDataset, "manifest has no entries");

    const std::size_t n = manifest.entries.size();
    std::vector<std::optional<FeatureVector>> features(n);
    std::vector<std::string> failures(n);

    parallel_for(n, options.jobs, [&](std::size_t i) {
        const ManifestEntry& entry = manifest.entries[i];
        try {
            const std::vector<std::uint8_t> raw = read_binary_file(entry.path);
            const CodeSample sample = entry.mode == CarveMode::Elf
                                          ? carve_code(parse_elf(raw), raw, entry.path)
                                          : carve_raw(raw, entry.path);
            const std::optional<std::string> label =
                entry.label.empty() ? std::nullopt : std::optional<std::string>(entry.label);
            features[i] = options.fragment_bytes
                              ? featurize_fragment(sample, *options.fragment_bytes,
                                                   derive_seed(options.seed, entry.path), label)
                              : featurize_full(sample, label);
        } catch (const Error& e) {
            failures[i] = std::string(errc_name(e.code())) + ": " + e.what();
        }
    });

    FeaturizeResult result;
    for (std::size_t i = 0; i < n; ++i) {
        if (features[i])
            result.features.push_back(std::move(*features[i]));
        else
            result.skipped.push_back({manifest.entries[i].path, failures[i]});
    }
    if (result.features.empty())
        throw Error(Errc::AllFilesFailed, "no manifest file produced a feature vector");
    return result;
}

BuildResult build_dataset(const DatasetManifest& manifest, const BuildOptions& options) {
    FeaturizeResult featurized = featurize_manifest(manifest, options);
    BuildResult result;
    result.data = make_dataset(featurized.features);
    result.skipped = std::move(featurized.skipped);
    return result;
}

std::vector<ImmediateEntry> default_immediate_pool() {
    return {{1, 0.25}, {2, 0.20}, {4, 0.20}, {8, 0.15}, {0xFFFE, 0.20}};
}

std::vector<SynthFile> gen_synth_corpus(const std::vector<SynthIsaSpec>& specs,
                                        int files_per_spec, std::size_t bytes_per_file,
                                        std::uint64_t seed) {
    if (specs.empty()) throw Error(Errc::BadSpec, "need at least one spec");
    if (files_per_spec < 1) throw Error(Errc::BadSpec, "files_per_spec must be >= 1");
    std::size_t max_len = 0;
    std::set<std::string> names;
    for (const SynthIsaSpec& spec : specs) {
        validate_spec(spec);
        if (!names.insert(spec.name).second)
            throw Error(Errc::BadSpec, "duplicate spec name " + spec.name);
        max_len = std::max(max_len, static_cast<std::size_t>(spec.instruction_len_bytes));
    }
    if (bytes_per_file == 0 || bytes_per_file % max_len != 0)
        throw Error(Errc::BadSpec, "bytes_per_file must be a positive multiple of " +
                                       std::to_string(max_len));

    std::vector<SynthFile> corpus;
    corpus.reserve(specs.size() * static_cast<std::size_t>(files_per_spec));
    for (const SynthIsaSpec& spec : specs) {
        for (int idx = 0; idx < files_per_spec; ++idx) {
            Rng rng(derive_seed(seed, content_key(spec, idx)));
            SynthFile file;
            file.sample.bytes = generate_file(spec, bytes_per_file, rng);
            char tag[16];
            std::snprintf(tag, sizeof tag, "-%03d", idx);
            file.sample.source_id = spec.name + tag;
            file.sample.section_sizes = {file.sample.bytes.size()};
            file.label = spec.name;
            file.endian = spec.endianness;
            file.wordsize = 8 * spec.instruction_len_bytes;
            corpus.push_back(std::move(file));
        }
    }
    return corpus;
}

std::pair<SynthIsaSpec, SynthIsaSpec> make_twin_specs(const SynthIsaSpec& base) {
    std::string stem = base.name;
    if (stem.size() > 3 && (stem.ends_with("-be") || stem.ends_with("-le")))
        stem.resize(stem.size() - 3);

    SynthIsaSpec big = base;
    big.name = stem + "-be";
    big.endianness = Endian::Big;
    SynthIsaSpec little = base;
    little.name = stem + "-le";
    little.endianness = Endian::Little;
    return {std::move(big), std::move(little)};
}

std::vector<SynthIsaSpec> default_synth_specs() {
    std::vector<SynthIsaSpec> specs;

    SynthIsaSpec vega;
    vega.name = "vega";
    vega.instruction_len_bytes = 4;
    vega.opcode_bits = 8;
    vega.opcode_alphabet = {{0xE0, 0.6}, {0xE4, 0.2}, {0x3C, 0.2}};
    vega.endianness = Endian::Little;
    vega.immediate_prob = 0.10;
    specs.push_back(vega);

    SynthIsaSpec rigel;
    rigel.name = "rigel";
    rigel.instruction_len_bytes = 4;
    rigel.opcode_bits = 6;
    rigel.opcode_alphabet = {{0x48, 0.5}, {0x4C, 0.3}, {0x90, 0.2}};
    rigel.endianness = Endian::Big;
    rigel.immediate_prob = 0.20;
    specs.push_back(rigel);

    SynthIsaSpec altair;
    altair.name = "altair";
    altair.instruction_len_bytes = 2;
    altair.opcode_bits = 5;
    altair.opcode_alphabet = {{0xB8, 0.45}, {0x20, 0.35}, {0x7C, 0.20}};
    altair.endianness = Endian::Little;
    altair.immediate_prob = 0.0;
    specs.push_back(altair);

    SynthIsaSpec deneb;
    deneb.name = "deneb";
    deneb.instruction_len_bytes = 8;
    deneb.opcode_bits = 11;
    deneb.opcode_alphabet = {{0x0A, 0.5}, {0x12, 0.3}, {0xF4, 0.2}};
    deneb.endianness = Endian::Big;
    deneb.immediate_prob = 0.25;
    specs.push_back(deneb);

    SynthIsaSpec sirius;
    sirius.name = "sirius";
    sirius.instruction_len_bytes = 4;
    sirius.opcode_bits = 7;
    sirius.opcode_alphabet = {{0x60, 0.4}, {0x64, 0.3}, {0x68, 0.3}};
    sirius.endianness = Endian::Little;
    sirius.immediate_prob = 0.15;
    specs.push_back(sirius);

    SynthIsaSpec capella;
    capella.name = "capella";
    capella.instruction_len_bytes = 2;
    capella.opcode_bits = 8;
    capella.opcode_alphabet = {{0xD0, 0.7}, {0x2E, 0.3}};
    capella.endianness = Endian::Big;
    capella.immediate_prob = 0.0;
    specs.push_back(capella);

    SynthIsaSpec procyon;
    procyon.name = "procyon";
    procyon.instruction_len_bytes = 4;
    procyon.opcode_bits = 7;
    procyon.opcode_alphabet = {{0x84, 0.5}, {0x8C, 0.3}, {0x54, 0.2}};
    procyon.immediate_prob = 0.15;
    auto [big, little] = make_twin_specs(procyon);
    specs.push_back(std::move(big));
    specs.push_back(std::move(little));

    return specs;
}

std::vector<SynthIsaSpec> load_synth_specs(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(Errc::BadSpec, std::string("invalid spec JSON: ") + e.what());
    }
    try {
        if (!doc.is_array() || doc.empty())
            throw Error(Errc::BadSpec, "spec document must be a non-empty array");
        std::vector<SynthIsaSpec> specs;
        for (const json& j : doc) {
            SynthIsaSpec spec;
            spec.name = j.at("name").get<std::string>();
            spec.instruction_len_bytes = j.at("instruction_len_bytes").get<int>();
            spec.opcode_bits = j.at("opcode_bits").get<int>();
            spec.opcode_alphabet.clear();
            for (const json& ja : j.at("opcode_alphabet")) {
                const int prefix = ja.at("prefix").get<int>();
                if (prefix < 0 || prefix > 255)
                    throw Error(Errc::BadSpec, spec.name + ": alphabet prefix must be a byte");
                spec.opcode_alphabet.push_back(
                    {static_cast<std::uint8_t>(prefix), ja.at("prob").get<double>()});
            }
            const std::string endian = j.at("endianness").get<std::string>();
            if (endian == "big")
                spec.endianness = Endian::Big;
            else if (endian == "little")
                spec.endianness = Endian::Little;
            else
                throw Error(Errc::BadSpec, spec.name + ": endianness must be big or little");
            spec.immediate_prob = j.value("immediate_prob", 0.0);
            if (j.contains("immediate_pool")) {
                spec.immediate_pool.clear();
                for (const json& jp : j.at("immediate_pool")) {
                    const int value = jp.at("value").get<int>();
                    if (value < 0 || value > 0xFFFF)
                        throw Error(Errc::BadSpec, spec.name + ": pool value must fit 16 bits");
                    spec.immediate_pool.push_back(
                        {static_cast<std::uint16_t>(value), jp.at("weight").get<double>()});
                }
            }
            validate_spec(spec);
            specs.push_back(std::move(spec));
        }
        return specs;
    } catch (const json::exception& e) {
        throw Error(Errc::BadSpec, std::string("invalid spec JSON: ") + e.what());
    }
}

void write_synth_corpus(const std::vector<SynthFile>& corpus, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(Errc::IoError, "cannot create directory " + dir + ": " + ec.message());

    std::ostringstream manifest;
    for (const SynthFile& file : corpus) {
        const std::string name = file.sample.source_id + ".bin";
        const std::string path = dir + "/" + name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(Errc::IoError, "cannot open " + path + " for writing");
        out.write(reinterpret_cast<const char*>(file.sample.bytes.data()),
                  static_cast<std::streamsize>(file.sample.bytes.size()));
        if (!out) throw Error(Errc::IoError, "failed writing " + path);

        json entry;
        entry["path"] = path;
        entry["label"] = file.label;
        entry["endian"] = endian_name(file.endian);
        entry["wordsize"] = file.wordsize;
        entry["mode"] = "raw";
        manifest << entry.dump() << '\n';
    }

    const std::string manifest_path = dir + "/manifest.jsonl";
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot open " + manifest_path + " for writing");
    out << manifest.str();
    if (!out) throw Error(Errc::IoError, "failed writing " + manifest_path);
}

} // namespace binsleuth
