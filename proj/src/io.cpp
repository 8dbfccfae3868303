#include "mcbif/io.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "mcbif/config.hpp"

namespace mcbif {

std::string sha256_hex(const std::string& bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw OutputError("sha256: EVP_Digest failed");
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
}

std::string sha256_file(const std::filesystem::path& p)
{
    std::ifstream f(p, std::ios::binary);
    if (!f) throw OutputError(fmt::format("cannot read '{}'", p.string()));
    std::stringstream ss;
    ss << f.rdbuf();
    return sha256_hex(ss.str());
}

std::string field_csv(const Field& f, const std::string& provenance)
{
    if (!f.grid) throw std::invalid_argument("field_csv: field has no grid");
    std::string out;
    if (!provenance.empty()) out += "# provenance: " + provenance + "\n";
    out += "s,r,value\n";
    const auto& g = *f.grid;
    for (std::size_t i = 0; i < f.size(); ++i) out += fmt17(g.s[i]) + "," + fmt17(g.r[i]) + "," + fmt17(f[i]) + "\n";
    return out;
}

nlohmann::ordered_json json_real(double v)
{
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

OutputDir::OutputDir(std::filesystem::path dir) : dir_(std::move(dir))
{
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw OutputError(fmt::format("cannot create output directory '{}': {}", dir_.string(), ec.message()));
    // exactly one manifest per directory: stale outputs would not be listed
    std::filesystem::remove(dir_ / "manifest.json", ec);
}

void OutputDir::write(const std::string& name, const std::string& content)
{
    std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!f) throw OutputError(fmt::format("cannot write '{}'", (dir_ / name).string()));
    f << content;
    if (!f) throw OutputError(fmt::format("write failed for '{}'", (dir_ / name).string()));
    files_.push_back(name);
}

void OutputDir::write_json(const std::string& name, const nlohmann::ordered_json& j)
{
    write(name, j.dump(2) + "\n");
}

void OutputDir::finish(const nlohmann::ordered_json& meta)
{
    nlohmann::ordered_json m;
    m["run"] = meta;
    auto& files = m["files"] = nlohmann::ordered_json::array();
    for (const auto& name : files_)
        files.push_back({{"name", name},
                         {"sha256", sha256_file(dir_ / name)},
                         {"bytes", std::filesystem::file_size(dir_ / name)}});
    m["created_at"] = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                               std::chrono::system_clock::now())));
    std::ofstream f(dir_ / "manifest.json", std::ios::trunc);
    if (!f) throw OutputError(fmt::format("cannot write manifest in '{}'", dir_.string()));
    f << m.dump(2) << "\n";
}

} // namespace mcbif
