#pragma once

// On-disk certificate cache: <dir>/<n>-<lambda>-<method>-<seed>.json.
// Stores are write-temp-then-rename; loads re-verify the cover and move
// anything that fails into <dir>/quarantine/.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "cover.hpp"
#include "io.hpp"

namespace permcover {

inline std::filesystem::path default_cache_dir() {
  if (const char *env = std::getenv("PERMCOVER_CACHE"))
    return env;
  return "permcover-cache";
}

struct CacheKey {
  int n = 0;
  int lambda = 1;
  CoverMethod method = CoverMethod::exact;
  std::optional<std::uint64_t> seed;

  std::string filename() const {
    return std::to_string(n) + "-" + std::to_string(lambda) + "-" + to_string(method) + "-" +
           (seed ? std::to_string(*seed) : std::string("none")) + ".json";
  }
};

inline CacheKey cache_key(const CoverCertificate &c) {
  return {c.n, c.lambda, c.method, c.seed};
}

class CertificateCache {
public:
  explicit CertificateCache(std::filesystem::path dir = default_cache_dir())
      : dir_(std::move(dir)) {}

  const std::filesystem::path &dir() const { return dir_; }

  std::filesystem::path path_for(const CacheKey &key) const { return dir_ / key.filename(); }

  /// Atomic publish: readers see either the old file or the complete new one.
  void store(const CoverCertificate &cert) const {
    std::filesystem::create_directories(dir_);
    const auto target = path_for(cache_key(cert));
    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream tmp_name;
    tmp_name << ".tmp-" << ::getpid() << "-" << std::hash<std::thread::id>{}(std::this_thread::get_id())
             << "-" << counter++ << "-" << target.filename().string();
    const auto tmp = dir_ / tmp_name.str();
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out)
        throw std::runtime_error("cannot write cache file " + tmp.string());
      out << to_json(cert).dump(2) << '\n';
      out.flush();
      if (!out)
        throw std::runtime_error("short write to cache file " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
  }

  /**
   * Returns the cached certificate only if it parses, matches the key and
   * passes verify_cover against `g`. Anything else is a miss; invalid files
   * are quarantined and a message is appended to `warnings`.
   */
  std::optional<CoverCertificate> load(const CacheKey &key, const CoverageGraph &g,
                                       std::vector<std::string> *warnings = nullptr) const {
    const auto path = path_for(key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec))
      return std::nullopt;
    try {
      std::ifstream in(path);
      const auto j = Json::parse(in);
      auto cert = certificate_from_json(j);
      if (cert.n != key.n || cert.lambda != key.lambda || cert.method != key.method ||
          cert.seed != key.seed)
        throw InvalidInput("certificate does not match its cache key");
      if (cert.n != g.n())
        throw InvalidInput("certificate is for a different n than the graph");
      if (cert.status != CoverStatus::infeasible_budget &&
          !verify_cover(g, cert.selected, cert.lambda).ok)
        throw InvalidInput("cached selection is not a valid cover");
      if (cert.size < cert.lower_bound)
        throw InvalidInput("cached size is below its lower bound");
      return cert;
    } catch (const std::exception &e) {
      quarantine(path);
      if (warnings)
        warnings->push_back("cache entry " + path.string() + " rejected: " + e.what());
      return std::nullopt;
    }
  }

  /// All entries for (n, lambda) regardless of method or seed.
  std::vector<std::filesystem::path> entries_for(int n, int lambda) const {
    std::vector<std::filesystem::path> out;
    std::error_code ec;
    if (!std::filesystem::is_directory(dir_, ec))
      return out;
    const std::string prefix = std::to_string(n) + "-" + std::to_string(lambda) + "-";
    for (const auto &entry : std::filesystem::directory_iterator(dir_)) {
      const auto name = entry.path().filename().string();
      if (entry.is_regular_file() && name.rfind(prefix, 0) == 0 && name.ends_with(".json"))
        out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Parses a cache filename back into its key.
  static std::optional<CacheKey> parse_filename(const std::string &name) {
    if (!name.ends_with(".json"))
      return std::nullopt;
    std::vector<std::string> parts;
    std::stringstream ss(name.substr(0, name.size() - 5));
    std::string part;
    while (std::getline(ss, part, '-'))
      parts.push_back(part);
    if (parts.size() != 4)
      return std::nullopt;
    try {
      CacheKey key;
      key.n = std::stoi(parts[0]);
      key.lambda = std::stoi(parts[1]);
      key.method = parse_method(parts[2]);
      if (parts[3] != "none")
        key.seed = std::stoull(parts[3]);
      return key;
    } catch (...) {
      return std::nullopt;
    }
  }

private:
  void quarantine(const std::filesystem::path &path) const {
    std::error_code ec;
    const auto qdir = dir_ / "quarantine";
    std::filesystem::create_directories(qdir, ec);
    std::filesystem::rename(path, qdir / path.filename(), ec);
    if (ec)
      std::filesystem::remove(path, ec);
  }

  std::filesystem::path dir_;
};

} // namespace permcover
