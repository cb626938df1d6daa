#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace binsleuth {

enum class WordClass { Elf32, Elf64 };
enum class DataEncoding { Lsb, Msb };

struct SectionRecord {
    std::string name;        // resolved through the section-name string table; "" if unresolvable
    std::uint64_t flags = 0;
    std::uint64_t file_offset = 0;
    std::uint64_t size = 0;
    std::uint32_t section_type = 0;
};

struct ElfImage {
    WordClass word_class = WordClass::Elf32;
    DataEncoding data_encoding = DataEncoding::Lsb;
    std::vector<SectionRecord> sections;
};

// Concatenated executable bytes carved from one input. section_sizes records
// the length of each carved section in order; feature extraction uses it to
// keep byte pairs from spanning section boundaries.
struct CodeSample {
    std::vector<std::uint8_t> bytes;
    std::string source_id;
    std::vector<std::size_t> section_sizes;

    std::size_t section_count() const { return section_sizes.size(); }
};

inline constexpr std::uint64_t kShfExecInstr = 0x4;
inline constexpr std::uint32_t kShtNoBits = 8;

// Parses the ELF header and section table, honoring both 32/64-bit layouts
// and both LSB/MSB header encodings. Throws Error with code BadMagic,
// Truncated, or NoSectionTable.
ElfImage parse_elf(std::span<const std::uint8_t> input);

// Concatenates, in section-table order, every section carrying the
// executable-instruction flag or named exactly ".nv_fatbin". SHT_NOBITS
// sections are skipped (they occupy no file bytes). Throws NoCode if
// nothing matched or all matches were empty.
CodeSample carve_code(const ElfImage& image, std::span<const std::uint8_t> input,
                      std::string source_id = {});

// Treats the entire input as one code section. Throws EmptyInput.
CodeSample carve_raw(std::span<const std::uint8_t> input, std::string source_id = {});

// Whole-file read; throws IoError when the file cannot be opened or read.
std::vector<std::uint8_t> read_binary_file(const std::string& path);

} // namespace binsleuth
