#include "penning/io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "penning/errors.hpp"

namespace penning {

namespace {

void put_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

} // namespace

void write_photon_stream(const std::string& path, const PhotonRecord& photons) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("Io", "cannot open for writing: " + path);
    put_u64_le(out, photons.timestamps.size());
    for (double t : photons.timestamps) {
        std::uint64_t bits;
        std::memcpy(&bits, &t, 8);
        put_u64_le(out, bits);
    }
}

PhotonRecord read_photon_stream(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("Io", "cannot open photon stream: " + path);
    PhotonRecord rec;
    const std::uint64_t n = get_u64_le(in);
    rec.timestamps.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint64_t bits = get_u64_le(in);
        double t;
        std::memcpy(&t, &bits, 8);
        rec.timestamps[i] = t;
    }
    if (!in) throw Error("Io", "truncated photon stream: " + path);
    for (std::uint64_t i = 1; i < n; ++i)
        if (rec.timestamps[i] <= rec.timestamps[i - 1])
            throw Error("Io", "photon stream timestamps not strictly increasing");
    return rec;
}

void write_pgm16(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("Io", "cannot open for writing: " + path);
    const double peak = *std::max_element(img.pixels.begin(), img.pixels.end());
    const double scale = peak > 0.0 ? 65535.0 / peak : 0.0;
    out << "P5\n" << img.width << " " << img.height << "\n65535\n";
    for (int iy = 0; iy < img.height; ++iy) {
        for (int ix = 0; ix < img.width; ++ix) {
            const auto v = static_cast<std::uint16_t>(
                std::clamp(img.at(ix, iy) * scale, 0.0, 65535.0) + 0.5);
            const unsigned char hi = static_cast<unsigned char>(v >> 8);
            const unsigned char lo = static_cast<unsigned char>(v & 0xff);
            out.put(static_cast<char>(hi));
            out.put(static_cast<char>(lo));
        }
    }
    std::ofstream meta(path + ".meta.txt");
    meta << std::setprecision(17);
    meta << "meters_per_pixel = " << img.meters_per_pixel << "\n";
    meta << "total_weight = " << img.total_weight << "\n";
    meta << "spilled_weight = " << img.spilled << "\n";
    meta << "normalization_peak = " << peak << "\n";
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns)
    : path_(path), n_cols_(columns.size()) {
    std::ofstream out(path_);
    if (!out) throw Error("Io", "cannot open for writing: " + path_);
    for (std::size_t i = 0; i < columns.size(); ++i)
        out << columns[i] << (i + 1 < columns.size() ? "," : "\n");
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != n_cols_) throw Error("Io", "csv row width mismatch");
    std::ofstream out(path_, std::ios::app);
    out << std::setprecision(12);
    for (std::size_t i = 0; i < values.size(); ++i)
        out << values[i] << (i + 1 < values.size() ? "," : "\n");
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
    if (values.size() != n_cols_) throw Error("Io", "csv row width mismatch");
    std::ofstream out(path_, std::ios::app);
    for (std::size_t i = 0; i < values.size(); ++i)
        out << values[i] << (i + 1 < values.size() ? "," : "\n");
}

std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("Io", "cannot checksum missing file: " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

void write_manifest(const std::string& path, const RunManifest& m) {
    nlohmann::json j;
    j["scenario"] = m.scenario;
    j["code_version"] = m.code_version;
    j["seed"] = m.seed;
    j["resolved_config"] = m.resolved_config;
    j["output_checksums"] = m.output_checksums;
    std::ofstream out(path);
    if (!out) throw Error("Io", "cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("Io", "cannot open manifest: " + path);
    nlohmann::json j;
    in >> j;
    RunManifest m;
    m.scenario = j.value("scenario", "");
    m.code_version = j.value("code_version", "");
    m.seed = j.value("seed", 0ull);
    if (j.contains("resolved_config"))
        m.resolved_config = j["resolved_config"].get<std::map<std::string, std::string>>();
    if (j.contains("output_checksums"))
        m.output_checksums = j["output_checksums"].get<std::map<std::string, std::string>>();
    return m;
}

} // namespace penning
