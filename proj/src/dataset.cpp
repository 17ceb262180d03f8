#include "echoalign/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "echoalign/errors.hpp"
#include "echoalign/parallel.hpp"
#include "echoalign/rng.hpp"

namespace echoalign {

Dataset::Dataset(std::size_t num_classes, std::size_t dim, bool with_truth,
                 std::vector<LabeledInstance> instances, std::string provenance)
    : num_classes_(num_classes),
      dim_(dim),
      with_truth_(with_truth),
      instances_(std::move(instances)),
      provenance_(std::move(provenance)) {
  if (num_classes_ < 2) throw DomainError("dataset needs at least 2 classes");
  if (dim_ < 1) throw DomainError("dataset needs dim >= 1");
  if (provenance_.find_first_of("\r\n") != std::string::npos) {
    throw DomainError("provenance must be a single line");
  }
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const auto& inst = instances_[i];
    const auto where = " (id " + std::to_string(inst.id) + ")";
    if (i > 0 && inst.id <= instances_[i - 1].id) {
      throw DomainError("instance ids must be unique and ascending" + where);
    }
    if (inst.features.size() != dim_) throw DomainError("feature length != dim" + where);
    for (double f : inst.features) {
      if (!std::isfinite(f)) throw DomainError("non-finite feature" + where);
    }
    if (inst.noisy_label >= num_classes_) throw DomainError("noisy label out of range" + where);
    if (inst.true_label.has_value() != with_truth_) {
      throw DomainError("true label presence disagrees with truth flag" + where);
    }
    if (inst.true_label && *inst.true_label >= num_classes_) {
      throw DomainError("true label out of range" + where);
    }
  }
}

std::optional<std::size_t> Dataset::find(InstanceId id) const {
  auto it = std::lower_bound(instances_.begin(), instances_.end(), id,
                             [](const LabeledInstance& a, InstanceId v) { return a.id < v; });
  if (it == instances_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - instances_.begin());
}

Dataset Dataset::with_provenance(std::string provenance) const {
  return Dataset(num_classes_, dim_, with_truth_, instances_, std::move(provenance));
}

double Dataset::clean_rate() const {
  if (!with_truth_) throw DomainError("clean rate needs true labels");
  if (instances_.empty()) throw DomainError("clean rate of an empty dataset");
  std::size_t clean = 0;
  for (const auto& inst : instances_) clean += inst.noisy_label == *inst.true_label ? 1 : 0;
  return static_cast<double>(clean) / static_cast<double>(instances_.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector normalized(Vector v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("cannot normalize a zero or non-finite vector");
  for (double& x : v) x /= n;
  return v;
}

void SynthWorldSpec::validate() const {
  if (num_classes < 2) throw DomainError("world needs at least 2 classes");
  if (dim < 1) throw DomainError("world needs dim >= 1");
  if (!(prototype_separation > 0.0)) throw DomainError("prototype_separation must be > 0");
  if (!(intra_class_std > 0.0)) throw DomainError("intra_class_std must be > 0");
}

namespace {

Vector gaussian_vector(Stream& s, std::size_t dim, double scale) {
  Vector v(dim);
  for (double& x : v) x = scale * s.normal();
  return v;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::string world_provenance(const SynthWorldSpec& spec, std::uint64_t split) {
  std::ostringstream os;
  os << "generate classes=" << spec.num_classes << " dim=" << spec.dim
     << " per_class=" << spec.samples_per_class << " sep=" << spec.prototype_separation
     << " std=" << spec.intra_class_std << " seed=" << spec.seed << " split=" << split;
  return os.str();
}

}  // namespace

Dataset sample_instances(const SynthWorldSpec& spec, std::span<const Vector> prototypes,
                         std::uint64_t split) {
  spec.validate();
  if (prototypes.size() != spec.num_classes) throw MismatchError("one prototype per class required");
  const std::size_t n = spec.num_classes * spec.samples_per_class;
  const std::uint64_t seed = spec.seed + split * 0x9E3779B97F4A7C15ULL;
  std::vector<LabeledInstance> instances(n);
  parallel_for(n, [&](std::size_t i) {
    const ClassIndex c = i / spec.samples_per_class;
    Stream s(seed, "world.sample", i);
    Vector x = gaussian_vector(s, spec.dim, spec.intra_class_std);
    for (std::size_t d = 0; d < spec.dim; ++d) x[d] += prototypes[c][d];
    instances[i] = LabeledInstance{i, normalized(std::move(x)), c, c};
  });
  return Dataset(spec.num_classes, spec.dim, true, std::move(instances), world_provenance(spec, split));
}

World generate_world(const SynthWorldSpec& spec) {
  spec.validate();
  std::vector<Vector> prototypes;
  const std::size_t max_attempts = 10 * spec.num_classes;
  for (std::size_t attempt = 0; prototypes.size() < spec.num_classes; ++attempt) {
    if (attempt >= max_attempts) {
      throw DomainError("cannot place " + std::to_string(spec.num_classes) +
                        " prototypes with separation " + std::to_string(spec.prototype_separation) +
                        " in dim " + std::to_string(spec.dim));
    }
    Stream s(spec.seed, "world.prototype", attempt);
    Vector candidate = normalized(gaussian_vector(s, spec.dim, 1.0));
    const bool separated = std::all_of(prototypes.begin(), prototypes.end(), [&](const Vector& p) {
      return distance(p, candidate) >= spec.prototype_separation;
    });
    if (separated) prototypes.push_back(std::move(candidate));
  }
  Dataset data = sample_instances(spec, prototypes, 0);
  return World{std::move(data), std::move(prototypes)};
}

// ---------------------------------------------------------------------------
// Feature file format

namespace {

constexpr std::string_view kMagic = "echoalign-features";
constexpr std::string_view kVersion = "v1";
constexpr std::string_view kProvenanceKey = " provenance=";

void append_double(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = first + text.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (*first == '+') ++first;  // from_chars rejects a leading '+'
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

struct Header {
  std::size_t classes = 0;
  std::size_t dim = 0;
  bool truth = false;
  std::string provenance;
};

Header parse_header(std::string_view line, const std::string& source) {
  Header h;
  if (auto p = line.find(kProvenanceKey); p != std::string_view::npos) {
    h.provenance = std::string(line.substr(p + kProvenanceKey.size()));
    line = line.substr(0, p);
  }
  std::vector<std::string_view> tokens;
  for (std::size_t pos = 0; pos < line.size();) {
    const std::size_t next = line.find(' ', pos);
    const std::size_t end = next == std::string_view::npos ? line.size() : next;
    tokens.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  auto fail = [&](const std::string& why) { return ParseError(source, 1, "bad header: " + why); };
  if (tokens.size() != 5 || tokens[0] != kMagic) throw fail("expected '" + std::string(kMagic) + " v1 C=.. D=.. truth=..'");
  if (tokens[1] != kVersion) throw fail("unsupported version '" + std::string(tokens[1]) + "'");
  auto field = [&](std::string_view tok, std::string_view key, std::size_t& out) {
    if (tok.substr(0, key.size()) != key || !parse_number(tok.substr(key.size()), out)) {
      throw fail("expected " + std::string(key) + "<int>, got '" + std::string(tok) + "'");
    }
  };
  std::size_t truth = 0;
  field(tokens[2], "C=", h.classes);
  field(tokens[3], "D=", h.dim);
  field(tokens[4], "truth=", truth);
  if (h.classes < 2) throw fail("C must be >= 2");
  if (h.dim < 1) throw fail("D must be >= 1");
  if (truth > 1) throw fail("truth must be 0 or 1");
  h.truth = truth == 1;
  return h;
}

}  // namespace

std::string format_features(const Dataset& dataset) {
  std::string out;
  out.reserve(64 + dataset.size() * (16 + dataset.dim() * 22));
  out += kMagic;
  out += ' ';
  out += kVersion;
  out += " C=" + std::to_string(dataset.num_classes()) + " D=" + std::to_string(dataset.dim()) +
         " truth=" + (dataset.with_truth() ? "1" : "0");
  if (!dataset.provenance().empty()) {
    out += kProvenanceKey;
    out += dataset.provenance();
  }
  out += '\n';
  for (const auto& inst : dataset.instances()) {
    out += std::to_string(inst.id);
    out += ',';
    out += std::to_string(inst.noisy_label);
    if (inst.true_label) {
      out += ',';
      out += std::to_string(*inst.true_label);
    }
    for (double f : inst.features) {
      out += ',';
      append_double(out, f);
    }
    out += '\n';
  }
  return out;
}

Dataset parse_features(const std::string& text, const std::string& source) {
  std::string_view rest(text);
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (rest.empty()) return false;
    const std::size_t nl = rest.find('\n');
    line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    return true;
  };

  std::string_view line;
  if (!next_line(line)) throw ParseError(source, 1, "missing header");
  const Header h = parse_header(line, source);
  const std::size_t expected = 2 + (h.truth ? 1 : 0) + h.dim;

  std::vector<LabeledInstance> instances;
  while (next_line(line)) {
    if (line.empty()) {
      if (rest.empty()) break;  // trailing newline
      throw ParseError(source, line_no, "blank line");
    }
    const auto fields = split_commas(line);
    if (fields.size() != expected) {
      throw ParseError(source, line_no, "expected " + std::to_string(expected) + " fields, got " +
                                            std::to_string(fields.size()));
    }
    LabeledInstance inst;
    if (!parse_number(fields[0], inst.id)) throw ParseError(source, line_no, "bad id");
    if (!instances.empty() && inst.id <= instances.back().id) {
      throw ParseError(source, line_no, "ids must be unique and ascending");
    }
    std::size_t col = 1;
    auto label = [&](const char* what) {
      ClassIndex c = 0;
      if (!parse_number(fields[col], c)) throw ParseError(source, line_no, std::string("bad ") + what);
      if (c >= h.classes) throw ParseError(source, line_no, std::string(what) + " out of range");
      ++col;
      return c;
    };
    inst.noisy_label = label("label");
    if (h.truth) inst.true_label = label("true_label");
    inst.features.resize(h.dim);
    for (std::size_t d = 0; d < h.dim; ++d, ++col) {
      double v = 0.0;
      if (!parse_number(fields[col], v)) {
        throw ParseError(source, line_no, "bad feature value '" + std::string(fields[col]) + "'");
      }
      if (!std::isfinite(v)) throw ParseError(source, line_no, "non-finite feature");
      inst.features[d] = v;
    }
    instances.push_back(std::move(inst));
  }
  return Dataset(h.classes, h.dim, h.truth, std::move(instances), h.provenance);
}

Dataset read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_features(buf.str(), path.string());
}

void write_feature_file(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  const std::string text = format_features(dataset);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed for " + path.string());
}

Dataset prototypes_as_dataset(std::span<const Vector> prototypes, std::string provenance) {
  if (prototypes.empty()) throw DomainError("no prototypes");
  std::vector<LabeledInstance> rows;
  for (std::size_t c = 0; c < prototypes.size(); ++c) {
    rows.push_back(LabeledInstance{c, prototypes[c], c, std::nullopt});
  }
  return Dataset(prototypes.size(), prototypes.front().size(), false, std::move(rows),
                 std::move(provenance));
}

std::vector<Vector> prototypes_from_dataset(const Dataset& dataset) {
  if (dataset.size() != dataset.num_classes()) {
    throw MismatchError("prototype file must have exactly one row per class");
  }
  std::vector<Vector> out(dataset.num_classes());
  for (const auto& inst : dataset.instances()) {
    if (inst.id != inst.noisy_label) throw MismatchError("prototype row id must equal its class");
    out[inst.noisy_label] = inst.features;
  }
  return out;
}

}  // namespace echoalign
