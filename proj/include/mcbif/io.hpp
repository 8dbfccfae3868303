#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mcbif/radial_grid.hpp"

namespace mcbif {

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hex SHA-256 of a byte string / a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& p);

/// Field as CSV with columns s,r,value; weights add a leading
/// "# provenance: ..." line.
std::string field_csv(const Field& f, const std::string& provenance = {});

/// Collects the files written into one output directory and writes a single
/// manifest.json naming each with its SHA-256. Everything except the
/// "created_at" key is a deterministic function of the inputs.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir);

    const std::filesystem::path& path() const { return dir_; }

    /// Writes `name` (a plain file name) and records it.
    void write(const std::string& name, const std::string& content);
    void write_json(const std::string& name, const nlohmann::ordered_json& j);

    /// Writes manifest.json; `meta` is merged in under "run".
    void finish(const nlohmann::ordered_json& meta);

    const std::vector<std::string>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

/// JSON number that survives inf/nan (emitted as strings).
nlohmann::ordered_json json_real(double v);

} // namespace mcbif
