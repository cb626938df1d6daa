#include "binsleuth/carver.hpp"

#include <fstream>
#include <iterator>
#include <utility>

#include "binsleuth/error.hpp"

namespace binsleuth {

namespace {

// Field reader for one of the two ELF byte orders. All reads are
// bounds-checked; anything out of range raises Truncated.
struct Reader {
    std::span<const std::uint8_t> data;
    bool big_endian;

    std::uint64_t read(std::uint64_t offset, unsigned width) const {
        if (offset > data.size() || data.size() - offset < width)
            throw Error(Errc::Truncated, "field at offset " + std::to_string(offset) +
                                             " exceeds input of " + std::to_string(data.size()) + " bytes");
        std::uint64_t value = 0;
        if (big_endian) {
            for (unsigned i = 0; i < width; ++i)
                value = (value << 8) | data[offset + i];
        } else {
            for (unsigned i = 0; i < width; ++i)
                value |= static_cast<std::uint64_t>(data[offset + i]) << (8 * i);
        }
        return value;
    }

    std::uint16_t u16(std::uint64_t off) const { return static_cast<std::uint16_t>(read(off, 2)); }
    std::uint32_t u32(std::uint64_t off) const { return static_cast<std::uint32_t>(read(off, 4)); }
    std::uint64_t u64(std::uint64_t off) const { return read(off, 8); }
};

// Resolves sh_name against the section-name string table. Unresolvable
// names (bad index, offset past the table, unterminated string) become "".
std::string resolve_name(std::span<const std::uint8_t> input, const SectionRecord& strtab,
                         std::uint32_t name_offset) {
    if (strtab.section_type == kShtNoBits) return {};
    if (name_offset >= strtab.size) return {};
    std::uint64_t start = strtab.file_offset + name_offset;
    std::uint64_t limit = strtab.file_offset + strtab.size;
    if (limit > input.size()) return {};
    std::string name;
    for (std::uint64_t i = start; i < limit; ++i) {
        if (input[i] == 0) return name;
        name.push_back(static_cast<char>(input[i]));
    }
    return {}; // ran off the table without a terminator
}

} // namespace

ElfImage parse_elf(std::span<const std::uint8_t> input) {
    static constexpr std::uint8_t kMagic[4] = {0x7f, 'E', 'L', 'F'};
    if (input.size() < 4 || input[0] != kMagic[0] || input[1] != kMagic[1] ||
        input[2] != kMagic[2] || input[3] != kMagic[3])
        throw Error(Errc::BadMagic, "input does not begin with the ELF magic");
    if (input.size() < 52)
        throw Error(Errc::Truncated, "shorter than a 32-bit ELF header");

    const std::uint8_t ei_class = input[4];
    const std::uint8_t ei_data = input[5];
    if (ei_class != 1 && ei_class != 2)
        throw Error(Errc::BadMagic, "invalid class byte " + std::to_string(ei_class));
    if (ei_data != 1 && ei_data != 2)
        throw Error(Errc::BadMagic, "invalid data-encoding byte " + std::to_string(ei_data));

    ElfImage image;
    image.word_class = ei_class == 1 ? WordClass::Elf32 : WordClass::Elf64;
    image.data_encoding = ei_data == 1 ? DataEncoding::Lsb : DataEncoding::Msb;

    const bool is64 = image.word_class == WordClass::Elf64;
    if (is64 && input.size() < 64)
        throw Error(Errc::Truncated, "shorter than a 64-bit ELF header");

    Reader r{input, image.data_encoding == DataEncoding::Msb};

    // Generic e_shoff / e_shentsize / e_shnum / e_shstrndx offsets.
    const std::uint64_t sh_off = is64 ? r.u64(0x28) : r.u32(0x20);
    const std::uint16_t sh_entsize = r.u16(is64 ? 0x3a : 0x2e);
    const std::uint16_t sh_num = r.u16(is64 ? 0x3c : 0x30);
    const std::uint16_t sh_strndx = r.u16(is64 ? 0x3e : 0x32);

    if (sh_num == 0 || sh_off == 0)
        throw Error(Errc::NoSectionTable, "section header count is zero");

    const std::uint64_t min_entsize = is64 ? 64 : 40;
    if (sh_entsize < min_entsize)
        throw Error(Errc::Truncated, "section header entry size " + std::to_string(sh_entsize) +
                                         " below minimum " + std::to_string(min_entsize));
    if (sh_off > input.size() ||
        static_cast<std::uint64_t>(sh_num) * sh_entsize > input.size() - sh_off)
        throw Error(Errc::Truncated, "section table exceeds input");

    std::vector<std::uint32_t> name_offsets;
    name_offsets.reserve(sh_num);

    for (std::uint16_t i = 0; i < sh_num; ++i) {
        const std::uint64_t base = sh_off + static_cast<std::uint64_t>(i) * sh_entsize;
        SectionRecord rec;
        name_offsets.push_back(r.u32(base + 0));
        rec.section_type = r.u32(base + 4);
        if (is64) {
            rec.flags = r.u64(base + 8);
            rec.file_offset = r.u64(base + 24);
            rec.size = r.u64(base + 32);
        } else {
            rec.flags = r.u32(base + 8);
            rec.file_offset = r.u32(base + 16);
            rec.size = r.u32(base + 20);
        }
        // Sections that occupy file bytes must lie within the input.
        // SHT_NOBITS sections occupy none, so their recorded range is not
        // meaningful and real files routinely place it past the end.
        if (rec.section_type != kShtNoBits) {
            if (rec.file_offset > input.size() || rec.size > input.size() - rec.file_offset)
                throw Error(Errc::Truncated, "section " + std::to_string(i) + " exceeds input");
        }
        image.sections.push_back(std::move(rec));
    }

    if (sh_strndx < image.sections.size()) {
        const SectionRecord& strtab = image.sections[sh_strndx];
        for (std::uint16_t i = 0; i < sh_num; ++i)
            image.sections[i].name = resolve_name(input, strtab, name_offsets[i]);
    }
    return image;
}

CodeSample carve_code(const ElfImage& image, std::span<const std::uint8_t> input,
                      std::string source_id) {
    CodeSample sample;
    sample.source_id = std::move(source_id);
    for (const SectionRecord& sec : image.sections) {
        const bool is_code = (sec.flags & kShfExecInstr) != 0 || sec.name == ".nv_fatbin";
        if (!is_code || sec.section_type == kShtNoBits || sec.size == 0) continue;
        if (sec.file_offset > input.size() || sec.size > input.size() - sec.file_offset)
            throw Error(Errc::Truncated, "section exceeds input"); // unreachable after parse_elf
        const auto* begin = input.data() + sec.file_offset;
        sample.bytes.insert(sample.bytes.end(), begin, begin + sec.size);
        sample.section_sizes.push_back(sec.size);
    }
    if (sample.bytes.empty())
        throw Error(Errc::NoCode, "no non-empty executable section");
    return sample;
}

CodeSample carve_raw(std::span<const std::uint8_t> input, std::string source_id) {
    if (input.empty()) throw Error(Errc::EmptyInput, "raw input is empty");
    CodeSample sample;
    sample.source_id = std::move(source_id);
    sample.bytes.assign(input.begin(), input.end());
    sample.section_sizes.push_back(input.size());
    return sample;
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(Errc::IoError, "failed reading " + path);
    return bytes;
}

} // namespace binsleuth
