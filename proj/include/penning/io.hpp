#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "penning/dynamics.hpp"
#include "penning/imaging.hpp"

namespace penning {

/// Binary photon stream: little-endian 8-byte unsigned count, then count
/// IEEE-754 doubles (seconds, strictly increasing).
void write_photon_stream(const std::string& path, const PhotonRecord& photons);
PhotonRecord read_photon_stream(const std::string& path);

/// 16-bit binary PGM (P5, maxval 65535, MSB first), max-normalized, plus a
/// sidecar text file <path>.meta.txt with the physical scale.
void write_pgm16(const std::string& path, const Image& img);

/// Minimal CSV writer: header row then one row per record.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& values);
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::size_t n_cols_;
};

/// FNV-1a 64-bit checksum of a file's bytes, hex-encoded.
std::string file_checksum(const std::string& path);

struct RunManifest {
    std::string scenario;
    std::string code_version;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> resolved_config;
    std::map<std::string, std::string> output_checksums; // filename -> fnv1a64
};

void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

} // namespace penning
