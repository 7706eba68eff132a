#include "oe/io.h"

#include <fmt/format.h>

#include <bit>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "oe/errors.h"
#include "oe/log.h"

namespace oe {

namespace {

constexpr std::string_view kFeatureMagic = "OEF1";
constexpr std::string_view kCheckpointMagic = "OEC1";
constexpr std::string_view kCheckpointVersion = "1";

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

// Bounds-checked little-endian reader; `fail` builds the error for a short read.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint64_t uint(int n_bytes) {
    need(static_cast<std::size_t>(n_bytes));
    std::uint64_t v = 0;
    for (int b = 0; b < n_bytes; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += static_cast<std::size_t>(n_bytes);
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) {
      throw FormatError(fmt::format("{}: truncated at byte offset {} (need {} more bytes)",
                                    what_, pos_, n));
    }
  }

  std::string_view bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::ifstream open_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return in;
}

std::ofstream create_text(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  return out;
}

void finish_write(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw FormatError("write failed for " + path);
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

ConceptId lookup_concept(const Taxonomy& taxonomy, std::string_view name, const std::string& path,
                         std::size_t line_no) {
  const auto id = taxonomy.find(name);
  if (!id) {
    throw FormatError(fmt::format("{}:{}: unknown concept '{}'", path, line_no, name));
  }
  return *id;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in = open_text(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out = create_text(tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    finish_write(out, tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw FormatError(fmt::format("cannot rename {} to {}: {}", tmp, path, ec.message()));
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ----- Features -----------------------------------------------------------

FeatureMatrix parse_features(std::string_view bytes) {
  ByteReader in(bytes, "feature file");
  if (in.take(std::min<std::size_t>(4, bytes.size())) != kFeatureMagic) {
    throw FormatError("feature file: bad magic at byte offset 0");
  }
  const auto count = static_cast<std::size_t>(in.uint(4));
  const auto dim = static_cast<std::size_t>(in.uint(4));

  FeatureMatrix out;
  out.ids.reserve(count);
  std::unordered_set<std::string> seen;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t at = in.offset();
    const auto len = static_cast<std::size_t>(in.uint(2));
    std::string id(in.take(len));
    if (!seen.insert(id).second) {
      throw FormatError(fmt::format("feature file: duplicate id '{}' at byte offset {}", id, at));
    }
    out.ids.push_back(std::move(id));
  }
  if (in.remaining() != count * dim * 4) {
    throw FormatError(fmt::format("feature file: expected {} payload bytes at byte offset {}, found {}",
                                  count * dim * 4, in.offset(), in.remaining()));
  }
  out.data = Matrix(count, dim);
  for (double& v : out.data.values()) {
    v = std::bit_cast<float>(static_cast<std::uint32_t>(in.uint(4)));
  }
  return out;
}

FeatureMatrix load_features(const std::string& path) {
  try {
    return parse_features(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void save_features(const FeatureMatrix& features, const std::string& path) {
  require(features.ids.size() == features.data.rows(), "save_features: one id per row");
  std::string out(kFeatureMagic);
  put_u32(out, static_cast<std::uint32_t>(features.ids.size()));
  put_u32(out, static_cast<std::uint32_t>(features.data.cols()));
  for (const auto& id : features.ids) {
    require(id.size() <= 0xffff, "save_features: id longer than 65535 bytes");
    put_u16(out, static_cast<std::uint16_t>(id.size()));
    out += id;
  }
  for (const double v : features.data.values()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  write_file_atomic(path, out);
}

// ----- Text ---------------------------------------------------------------

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return tokens;
}

std::vector<CaptionText> read_caption_texts(const std::string& path, LoadStats* stats) {
  std::ifstream in = open_text(path);
  std::vector<CaptionText> out;
  LoadStats local;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(fmt::format("{}:{}: malformed JSON ({})", path, line_no, e.what()));
    }
    auto field = [&](const char* key) {
      if (!obj.is_object() || !obj.contains(key) || !obj[key].is_string()) {
        throw FormatError(fmt::format("{}:{}: missing string field '{}'", path, line_no, key));
      }
      return obj[key].get<std::string>();
    };
    CaptionText rec{field("caption_id"), field("image_id"), tokenize(field("caption"))};
    ++local.read;
    if (rec.tokens.empty()) {
      ++local.skipped_empty;
      log_warn("{}:{}: empty caption {} skipped", path, line_no, rec.caption_id);
      continue;
    }
    out.push_back(std::move(rec));
  }
  if (stats) *stats = local;
  return out;
}

void write_captions(const std::vector<CaptionText>& captions, const std::string& path) {
  std::ofstream out = create_text(path);
  for (const auto& c : captions) {
    std::string text;
    for (std::size_t k = 0; k < c.tokens.size(); ++k) {
      if (k > 0) text += ' ';
      text += c.tokens[k];
    }
    const nlohmann::ordered_json obj = {
        {"caption_id", c.caption_id}, {"image_id", c.image_id}, {"caption", text}};
    out << obj.dump() << '\n';
  }
  finish_write(out, path);
}

RetrievalSet load_captions(const std::string& path, const Vocabulary& vocab,
                           const FeatureMatrix& features, LoadStats* stats) {
  const auto texts = read_caption_texts(path, stats);
  std::unordered_map<std::string, std::size_t> image_row;
  for (std::size_t k = 0; k < features.ids.size(); ++k) image_row.emplace(features.ids[k], k);

  // Only images that have at least one caption, in feature-file order.
  std::vector<std::size_t> used;
  std::vector<std::ptrdiff_t> remap(features.ids.size(), -1);
  std::vector<std::size_t> rows;
  rows.reserve(texts.size());
  for (const auto& t : texts) {
    const auto it = image_row.find(t.image_id);
    if (it == image_row.end()) {
      throw FormatError(fmt::format("{}: caption {} refers to unknown image '{}'", path,
                                    t.caption_id, t.image_id));
    }
    rows.push_back(it->second);
    remap[it->second] = 0;
  }
  for (std::size_t k = 0; k < remap.size(); ++k) {
    if (remap[k] >= 0) {
      remap[k] = static_cast<std::ptrdiff_t>(used.size());
      used.push_back(k);
    }
  }

  RetrievalSet set;
  set.images.reserve(used.size());
  for (const std::size_t k : used) {
    const auto row = features.data.row(k);
    set.images.emplace_back(row.begin(), row.end());
  }
  for (std::size_t k = 0; k < texts.size(); ++k) {
    set.captions.push_back(vocab.encode(texts[k].tokens));
    set.caption_image.push_back(static_cast<std::size_t>(remap[rows[k]]));
  }
  return set;
}

std::vector<EntailText> read_entail_texts(const std::string& path, LoadStats* stats) {
  std::ifstream in = open_text(path);
  std::vector<EntailText> out;
  LoadStats local;
  std::string line;
  std::size_t line_no = 0;
  // Column positions; a leading SNLI header row ("gold_label ... sentence1 ...
  // sentence2") selects them by name.
  std::size_t label_col = 0, premise_col = 1, hypothesis_col = 2;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (line_no == 1 && cols[0] == "gold_label") {
      std::map<std::string_view, std::size_t> index;
      for (std::size_t k = 0; k < cols.size(); ++k) index.emplace(cols[k], k);
      if (!index.count("sentence1") || !index.count("sentence2")) {
        throw FormatError(path + ":1: header lacks sentence1/sentence2 columns");
      }
      premise_col = index["sentence1"];
      hypothesis_col = index["sentence2"];
      continue;
    }
    if (cols.size() <= std::max({label_col, premise_col, hypothesis_col})) {
      throw FormatError(fmt::format("{}:{}: expected label, premise and hypothesis columns",
                                    path, line_no));
    }
    const auto label = cols[label_col];
    ++local.read;
    if (label == "-") {
      ++local.skipped_unlabeled;
      continue;
    }
    EntailText pair;
    if (label == "entailment") {
      pair.entailed = true;
    } else if (label == "neutral" || label == "contradiction") {
      pair.entailed = false;
    } else {
      throw FormatError(fmt::format("{}:{}: unknown label '{}'", path, line_no, label));
    }
    pair.premise = tokenize(cols[premise_col]);
    pair.hypothesis = tokenize(cols[hypothesis_col]);
    if (pair.premise.empty() || pair.hypothesis.empty()) {
      ++local.skipped_empty;
      log_warn("{}:{}: empty sentence skipped", path, line_no);
      continue;
    }
    out.push_back(std::move(pair));
  }
  if (local.skipped_unlabeled > 0) {
    log_info("{}: skipped {} unlabeled pairs", path, local.skipped_unlabeled);
  }
  if (stats) *stats = local;
  return out;
}

std::vector<EntailExample> load_entail(const std::string& path, const Vocabulary& vocab,
                                       LoadStats* stats) {
  const auto texts = read_entail_texts(path, stats);
  std::vector<EntailExample> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    out.push_back({vocab.encode(t.premise), vocab.encode(t.hypothesis), t.entailed});
  }
  return out;
}

void write_entail(const std::vector<EntailText>& pairs, const std::string& path) {
  std::ofstream out = create_text(path);
  auto join = [](const std::vector<std::string>& tokens) {
    std::string s;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
      if (k > 0) s += ' ';
      s += tokens[k];
    }
    return s;
  };
  for (const auto& p : pairs) {
    out << (p.entailed ? "entailment" : "contradiction") << '\t' << join(p.premise) << '\t'
        << join(p.hypothesis) << '\n';
  }
  finish_write(out, path);
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in = open_text(path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    tokens.push_back(line);
  }
  if (tokens.empty() || tokens[0] != Vocabulary::kUnkToken) {
    throw FormatError(path + ": vocabulary must start with <unk>");
  }
  try {
    return Vocabulary(std::move(tokens));
  } catch (const ContractViolation& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out = create_text(path);
  for (const auto& t : vocab.tokens()) out << t << '\n';
  finish_write(out, path);
}

// ----- Taxonomy files -----------------------------------------------------

std::vector<NamedEdge> read_edges(const std::string& path) {
  std::ifstream in = open_text(path);
  std::vector<NamedEdge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
      throw FormatError(fmt::format("{}:{}: expected child<TAB>parent", path, line_no));
    }
    edges.emplace_back(std::string(cols[0]), std::string(cols[1]));
  }
  return edges;
}

void write_edges(std::span<const NamedEdge> edges, const std::string& path) {
  std::ofstream out = create_text(path);
  for (const auto& [child, parent] : edges) out << child << '\t' << parent << '\n';
  finish_write(out, path);
}

void write_pairs(const Taxonomy& taxonomy, const PairSet& pairs, const std::string& path) {
  std::ofstream out = create_text(path);
  for (const auto& p : pairs) out << taxonomy.name(p.child) << '\t' << taxonomy.name(p.parent) << '\n';
  finish_write(out, path);
}

void write_split(const Taxonomy& taxonomy, const EdgeSplit& split, const std::string& path) {
  std::ofstream out = create_text(path);
  out << "#seed\t" << split.seed << '\n';
  auto section = [&](const char* name, const PairSet& pairs) {
    out << '#' << name << '\n';
    for (const auto& p : pairs) {
      out << taxonomy.name(p.child) << '\t' << taxonomy.name(p.parent) << '\n';
    }
  };
  section("train", split.train);
  section("dev", split.dev);
  section("test", split.test);
  finish_write(out, path);
}

EdgeSplit read_split(const Taxonomy& taxonomy, const std::string& path) {
  std::ifstream in = open_text(path);
  std::vector<ConceptPair> train, dev, test;
  std::vector<ConceptPair>* current = nullptr;
  EdgeSplit out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto cols = split_tabs(std::string_view(line).substr(1));
      if (cols[0] == "train") {
        current = &train;
      } else if (cols[0] == "dev") {
        current = &dev;
      } else if (cols[0] == "test") {
        current = &test;
      } else if (cols[0] == "seed" && cols.size() == 2) {
        std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), out.seed);
      } else {
        throw FormatError(fmt::format("{}:{}: unknown section '{}'", path, line_no, line));
      }
      continue;
    }
    if (current == nullptr) {
      throw FormatError(fmt::format("{}:{}: pair before any section header", path, line_no));
    }
    const auto cols = split_tabs(line);
    if (cols.size() != 2) {
      throw FormatError(fmt::format("{}:{}: expected child<TAB>parent", path, line_no));
    }
    current->push_back({lookup_concept(taxonomy, cols[0], path, line_no),
                        lookup_concept(taxonomy, cols[1], path, line_no)});
  }
  out.train = PairSet(std::move(train));
  out.dev = PairSet(std::move(dev));
  out.test = PairSet(std::move(test));
  return out;
}

void write_labeled_pairs(const Taxonomy& taxonomy, const LabeledSplit& pairs,
                         const std::string& path) {
  std::ofstream out = create_text(path);
  auto section = [&](const char* name, const std::vector<LabeledPair>& list) {
    out << '#' << name << '\n';
    for (const auto& p : list) {
      out << taxonomy.name(p.child) << '\t' << taxonomy.name(p.parent) << '\t'
          << (p.label ? 1 : 0) << '\n';
    }
  };
  section("dev", pairs.dev);
  section("test", pairs.test);
  finish_write(out, path);
}

LabeledSplit read_labeled_pairs(const Taxonomy& taxonomy, const std::string& path) {
  std::ifstream in = open_text(path);
  LabeledSplit out;
  std::vector<LabeledPair>* current = nullptr;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    if (line == "#dev") {
      current = &out.dev;
      continue;
    }
    if (line == "#test") {
      current = &out.test;
      continue;
    }
    const auto cols = split_tabs(line);
    if (current == nullptr || cols.size() != 3 || (cols[2] != "0" && cols[2] != "1")) {
      throw FormatError(fmt::format("{}:{}: expected child<TAB>parent<TAB>0|1 in a #dev or #test section",
                                    path, line_no));
    }
    current->push_back({lookup_concept(taxonomy, cols[0], path, line_no),
                        lookup_concept(taxonomy, cols[1], path, line_no), cols[2] == "1"});
  }
  return out;
}

// ----- Checkpoints --------------------------------------------------------

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string header = fmt::format("version {}\n", kCheckpointVersion);
  for (const auto& [key, value] : ckpt.meta) {
    require(key.find_first_of(" =\n") == std::string::npos && value.find('\n') == std::string::npos,
            "checkpoint: metadata keys must not contain spaces, '=' or newlines");
    header += fmt::format("meta {}={}\n", key, value);
  }
  std::size_t offset = 0;
  for (const auto& [name, m] : ckpt.tensors) {
    require(name.find_first_of(" \n") == std::string::npos,
            "checkpoint: tensor names must not contain spaces or newlines");
    header += fmt::format("tensor {} {} {} {}\n", name, m.rows(), m.cols(), offset);
    offset += m.size() * 8;
  }

  std::string out(kCheckpointMagic);
  put_u64(out, header.size());
  out += header;
  for (const auto& [name, m] : ckpt.tensors) {
    for (const double v : m.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  put_u64(out, fnv1a64(out));
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kCheckpointMagic.size() + 16 ||
      bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw CorruptionError("checkpoint: bad magic or truncated file");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  ByteReader tail(bytes.substr(bytes.size() - 8), "checkpoint");
  if (tail.uint(8) != fnv1a64(body)) {
    throw CorruptionError("checkpoint: checksum mismatch (file is truncated or corrupted)");
  }

  ByteReader in(body, "checkpoint");
  in.take(kCheckpointMagic.size());
  std::size_t header_len = 0;
  std::string_view header;
  try {
    header_len = static_cast<std::size_t>(in.uint(8));
    header = in.take(header_len);
  } catch (const FormatError& e) {
    throw CorruptionError(e.what());
  }
  const std::string_view payload = body.substr(in.offset());

  Checkpoint ckpt;
  std::istringstream lines{std::string(header)};
  std::string line;
  bool saw_version = false;
  std::size_t expected_offset = 0;
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind == "version") {
      std::string v;
      fields >> v;
      if (v != kCheckpointVersion) throw VersionError("checkpoint: unsupported version " + v);
      saw_version = true;
    } else if (kind == "meta") {
      const std::string rest = line.substr(5);
      const auto eq = rest.find('=');
      if (eq == std::string::npos) throw CorruptionError("checkpoint: bad meta line");
      ckpt.meta[rest.substr(0, eq)] = rest.substr(eq + 1);
    } else if (kind == "tensor") {
      std::string name;
      std::size_t rows = 0, cols = 0, offset = 0;
      if (!(fields >> name >> rows >> cols >> offset) || offset != expected_offset ||
          offset + rows * cols * 8 > payload.size()) {
        throw CorruptionError("checkpoint: bad tensor directory entry: " + line);
      }
      std::vector<double> values(rows * cols);
      ByteReader data(payload.substr(offset, rows * cols * 8), "checkpoint");
      for (double& v : values) v = std::bit_cast<double>(data.uint(8));
      ckpt.tensors.emplace(name, Matrix(rows, cols, std::move(values)));
      expected_offset = offset + rows * cols * 8;
    } else {
      throw CorruptionError("checkpoint: unknown header line: " + line);
    }
  }
  if (!saw_version) throw VersionError("checkpoint: missing version");
  if (expected_offset != payload.size()) {
    throw CorruptionError("checkpoint: payload size does not match tensor directory");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  try {
    return parse_checkpoint(read_file(path));
  } catch (const CorruptionError& e) {
    throw CorruptionError(path + ": " + e.what());
  }
}

}  // namespace oe
