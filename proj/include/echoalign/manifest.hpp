#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace echoalign {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Ordered key=value record of a run: inputs (with checksums), parameters,
/// seeds, and output checksums. Deterministic content, no timestamps.
///
///   echoalign-manifest v1
///   key=value
///   ...
class RunManifest {
 public:
  using Entry = std::pair<std::string, std::string>;

  void add(std::string key, std::string value);
  void add(std::string key, double value);
  void add(std::string key, std::uint64_t value);

  /// Records `input.<role>=<path>` and `input.<role>.sha256=<hex>`.
  void add_input(const std::string& role, const std::filesystem::path& path);
  /// Records `output.<role>=<path>` and `output.<role>.sha256=<hex>`.
  void add_output(const std::string& role, const std::filesystem::path& path);

  /// Appends every entry of `other` under `prefix.`.
  void merge(const RunManifest& other, const std::string& prefix = {});

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::optional<std::string> get(std::string_view key) const;
  std::vector<std::string> get_all(std::string_view key) const;

  std::string format() const;
  static RunManifest parse(const std::string& text, const std::string& source = "<manifest>");

  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);

 private:
  std::vector<Entry> entries_;
};

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace echoalign
