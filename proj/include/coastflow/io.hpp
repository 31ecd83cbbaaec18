#pragma once

#include "coastflow/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace coastflow::io {

/// Binary array container:
///   magic "GFUS" | version u32 LE | dtype u8 (0 = float64 LE) | ndim u8 |
///   dims u64 LE each | row-major float64 payload.
/// Write -> read -> write is byte-identical.
struct ArrayData {
    std::vector<std::uint64_t> dims;
    Vector values; // row-major flattening of dims

    std::uint64_t size() const {
        std::uint64_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

inline constexpr std::uint32_t kArrayFormatVersion = 1;

void write_array(const std::string& path, const std::vector<std::uint64_t>& dims,
                 const double* data);
void write_array(const std::string& path, const ArrayData& a);
ArrayData read_array(const std::string& path);

/// Expected on-disk byte length of an array with the given dims.
std::uint64_t array_file_bytes(const std::vector<std::uint64_t>& dims);

/// Stage manifest: array descriptors plus provenance. Loading verifies that
/// every descriptor resolves to an existing file of exactly the declared
/// byte length and that the format version matches.
struct ArrayDesc {
    std::string name;
    std::string file; // relative to the manifest's directory
    std::string dtype = "float64";
    std::vector<std::uint64_t> dims;
    std::uint64_t bytes = 0;
};

struct Manifest {
    std::uint32_t version = kArrayFormatVersion;
    std::string stage;
    std::string produced_by;
    std::string created_at;
    std::string config_snapshot;
    std::map<std::string, std::uint64_t> seeds;
    std::map<std::string, std::string> meta;
    std::vector<ArrayDesc> arrays;

    bool has_array(const std::string& name) const;
    const ArrayDesc& array(const std::string& name) const;
};

void save_manifest(const std::string& path, const Manifest& m);
Manifest load_manifest(const std::string& path); // validates; throws IoError

/// Registers an array: writes <dir>/<name>.gfus and appends a descriptor.
void add_array(Manifest& m, const std::string& dir, const std::string& name,
               const std::vector<std::uint64_t>& dims, const double* data);

/// Minimal RFC-4180 CSV emitter. Fields containing a comma, quote, CR or LF
/// are quoted with internal quotes doubled.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<std::string>& fields);
    static std::string format(double v); // shortest round-trip float form

private:
    struct Impl;
    Impl* impl_;
};

/// 8-bit binary PGM (P5). Values map linearly: gray = round(255*(v-vmin)/(vmax-vmin)),
/// clamped; vmin == vmax renders mid-gray.
void write_pgm(const std::string& path, Index rows, Index cols, const double* values,
               double vmin, double vmax);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace coastflow::io
