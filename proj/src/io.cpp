#include "coastflow/io.hpp"

#include "coastflow/errors.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "array format is little-endian; big-endian hosts are unsupported");

namespace coastflow::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'G', 'F', 'U', 'S'};

template <typename T>
void put(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, const std::string& path) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("truncated array file: " + path);
    return v;
}

} // namespace

std::uint64_t array_file_bytes(const std::vector<std::uint64_t>& dims) {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return 4 + 4 + 1 + 1 + 8 * dims.size() + 8 * n;
}

void write_array(const std::string& path, const std::vector<std::uint64_t>& dims,
                 const double* data) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kArrayFormatVersion);
    put<std::uint8_t>(os, 0); // float64 little-endian
    put<std::uint8_t>(os, static_cast<std::uint8_t>(dims.size()));
    std::uint64_t n = 1;
    for (auto d : dims) {
        put<std::uint64_t>(os, d);
        n *= d;
    }
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(8 * n));
    if (!os) throw IoError("short write: " + path);
}

void write_array(const std::string& path, const ArrayData& a) {
    if (static_cast<std::uint64_t>(a.values.size()) != a.size())
        throw IoError("array dims/payload mismatch for " + path);
    write_array(path, a.dims, a.values.data());
}

ArrayData read_array(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open array file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("bad magic in array file: " + path);
    auto version = get<std::uint32_t>(is, path);
    if (version != kArrayFormatVersion)
        throw IoError("unsupported array format version " + std::to_string(version) + " in " + path);
    auto dtype = get<std::uint8_t>(is, path);
    if (dtype != 0) throw IoError("unsupported dtype code in " + path);
    auto ndim = get<std::uint8_t>(is, path);
    ArrayData a;
    a.dims.resize(ndim);
    std::uint64_t n = 1;
    for (auto& d : a.dims) {
        d = get<std::uint64_t>(is, path);
        n *= d;
    }
    a.values.resize(static_cast<Index>(n));
    is.read(reinterpret_cast<char*>(a.values.data()), static_cast<std::streamsize>(8 * n));
    if (!is) throw IoError("truncated payload in " + path);
    return a;
}

bool Manifest::has_array(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return true;
    return false;
}

const ArrayDesc& Manifest::array(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return a;
    throw IoError("manifest has no array named '" + name + "'");
}

void save_manifest(const std::string& path, const Manifest& m) {
    json j;
    j["format_version"] = m.version;
    j["stage"] = m.stage;
    j["produced_by"] = m.produced_by;
    j["created_at"] = m.created_at;
    j["config_snapshot"] = m.config_snapshot;
    j["seeds"] = m.seeds;
    j["meta"] = m.meta;
    j["arrays"] = json::array();
    for (const auto& a : m.arrays) {
        j["arrays"].push_back({{"name", a.name},
                               {"file", a.file},
                               {"dtype", a.dtype},
                               {"dims", a.dims},
                               {"bytes", a.bytes}});
    }
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write manifest: " + path);
    os << j.dump(2) << '\n';
}

Manifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw IoError("malformed manifest " + path + ": " + e.what());
    }
    Manifest m;
    m.version = j.at("format_version").get<std::uint32_t>();
    if (m.version != kArrayFormatVersion)
        throw IoError("unsupported manifest version in " + path);
    m.stage = j.value("stage", "");
    m.produced_by = j.value("produced_by", "");
    m.created_at = j.value("created_at", "");
    m.config_snapshot = j.value("config_snapshot", "");
    if (j.contains("seeds")) m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    if (j.contains("meta")) m.meta = j.at("meta").get<std::map<std::string, std::string>>();
    const fs::path base = fs::path(path).parent_path();
    for (const auto& ja : j.at("arrays")) {
        ArrayDesc a;
        a.name = ja.at("name").get<std::string>();
        a.file = ja.at("file").get<std::string>();
        a.dtype = ja.at("dtype").get<std::string>();
        a.dims = ja.at("dims").get<std::vector<std::uint64_t>>();
        a.bytes = ja.at("bytes").get<std::uint64_t>();
        const fs::path f = base / a.file;
        std::error_code ec;
        const auto actual = fs::file_size(f, ec);
        if (ec) throw IoError("manifest " + path + ": missing array file " + f.string());
        if (actual != a.bytes)
            throw IoError("manifest " + path + ": " + a.file + " is " + std::to_string(actual) +
                          " bytes, expected " + std::to_string(a.bytes));
        if (a.bytes != array_file_bytes(a.dims))
            throw IoError("manifest " + path + ": declared dims of " + a.name +
                          " do not match declared byte length");
        m.arrays.push_back(std::move(a));
    }
    return m;
}

void add_array(Manifest& m, const std::string& dir, const std::string& name,
               const std::vector<std::uint64_t>& dims, const double* data) {
    ArrayDesc d;
    d.name = name;
    d.file = name + ".gfus";
    d.dims = dims;
    d.bytes = array_file_bytes(dims);
    write_array((fs::path(dir) / d.file).string(), dims, data);
    m.arrays.push_back(std::move(d));
}

struct CsvWriter::Impl {
    std::ofstream os;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl) {
    impl_->os.open(path, std::ios::trunc);
    if (!impl_->os) {
        delete impl_;
        throw IoError("cannot open CSV for writing: " + path);
    }
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<std::string>& fields) {
    bool first = true;
    for (const auto& f : fields) {
        if (!first) impl_->os << ',';
        first = false;
        if (f.find_first_of(",\"\r\n") != std::string::npos) {
            impl_->os << '"';
            for (char c : f) {
                if (c == '"') impl_->os << '"';
                impl_->os << c;
            }
            impl_->os << '"';
        } else {
            impl_->os << f;
        }
    }
    impl_->os << '\n';
}

std::string CsvWriter::format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // prefer the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char t[32];
        std::snprintf(t, sizeof(t), "%.*g", prec, v);
        double back = std::strtod(t, nullptr);
        if (back == v) return t;
    }
    return buf;
}

void write_pgm(const std::string& path, Index rows, Index cols, const double* values,
               double vmin, double vmax) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open PGM for writing: " + path);
    os << "P5\n" << cols << ' ' << rows << "\n255\n";
    const double span = vmax - vmin;
    std::vector<unsigned char> line(static_cast<size_t>(cols));
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            double v = values[r * cols + c];
            double g = span > 0 ? 255.0 * (v - vmin) / span : 127.0;
            g = std::min(255.0, std::max(0.0, g));
            line[static_cast<size_t>(c)] = static_cast<unsigned char>(std::lround(g));
        }
        os.write(reinterpret_cast<const char*>(line.data()), cols);
    }
    if (!os) throw IoError("short write: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open file: " + path);
    std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return s;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << content;
    if (!os) throw IoError("short write: " + path);
}

} // namespace coastflow::io
