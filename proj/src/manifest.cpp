#include "echoalign/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "echoalign/errors.hpp"

namespace echoalign {

namespace {
constexpr std::string_view kManifestMagic = "echoalign-manifest v1";
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void RunManifest::add(std::string key, std::string value) {
  if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos) {
    throw DomainError("manifest key/value must be single-line and key must not contain '='");
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

void RunManifest::add(std::string key, double value) { add(std::move(key), format_double(value)); }

void RunManifest::add(std::string key, std::uint64_t value) {
  add(std::move(key), std::to_string(value));
}

void RunManifest::add_input(const std::string& role, const std::filesystem::path& path) {
  add("input." + role, path.string());
  add("input." + role + ".sha256", sha256_file(path));
}

void RunManifest::add_output(const std::string& role, const std::filesystem::path& path) {
  add("output." + role, path.string());
  add("output." + role + ".sha256", sha256_file(path));
}

void RunManifest::merge(const RunManifest& other, const std::string& prefix) {
  for (const auto& [k, v] : other.entries_) add(prefix.empty() ? k : prefix + "." + k, v);
}

std::optional<std::string> RunManifest::get(std::string_view key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::vector<std::string> RunManifest::get_all(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (k == key) out.push_back(v);
  }
  return out;
}

std::string RunManifest::format() const {
  std::string out(kManifestMagic);
  out += '\n';
  for (const auto& [k, v] : entries_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

RunManifest RunManifest::parse(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  RunManifest m;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != kManifestMagic) throw ParseError(source, 1, "not an echoalign manifest");
      continue;
    }
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, "expected key=value");
    m.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  if (line_no == 0) throw ParseError(source, 1, "empty manifest");
  return m;
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << format();
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

}  // namespace echoalign
