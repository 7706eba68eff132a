#pragma once

// File formats.
//
//   features     OEF1 | u32 count | u32 dim | count x (u16 len, bytes) |
//                count*dim float32, all little-endian, row-major
//   captions     JSON lines: {"caption_id", "image_id", "caption"}
//   entailment   label<TAB>premise<TAB>hypothesis
//   edges        child<TAB>parent
//   vocabulary   one token per line, line 0 is <unk>
//   checkpoint   OEC1 | u64 header_len | header | float64 payload | u64 FNV-1a
//                of everything before it

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "oe/encoders.h"
#include "oe/numerics.h"
#include "oe/taxonomy.h"
#include "oe/training.h"

namespace oe {

struct FeatureMatrix {
  std::vector<std::string> ids;
  Matrix data;  // ids.size() x dim
};

FeatureMatrix load_features(const std::string& path);
void save_features(const FeatureMatrix& features, const std::string& path);
// Same as load_features, from bytes already in memory.
FeatureMatrix parse_features(std::string_view bytes);

// Lowercase ASCII, every punctuation character becomes its own token, split
// on whitespace.
std::vector<std::string> tokenize(std::string_view text);

struct CaptionText {
  std::string caption_id;
  std::string image_id;
  std::vector<std::string> tokens;
};

struct LoadStats {
  std::size_t read = 0;
  std::size_t skipped_empty = 0;
  std::size_t skipped_unlabeled = 0;
};

// Empty captions are skipped with a warning; malformed lines throw FormatError.
std::vector<CaptionText> read_caption_texts(const std::string& path, LoadStats* stats = nullptr);
void write_captions(const std::vector<CaptionText>& captions, const std::string& path);

// Caption records mapped onto a feature matrix. Throws FormatError if a
// caption refers to an image id missing from `features`.
RetrievalSet load_captions(const std::string& path, const Vocabulary& vocab,
                           const FeatureMatrix& features, LoadStats* stats = nullptr);

struct EntailText {
  std::vector<std::string> premise;
  std::vector<std::string> hypothesis;
  bool entailed = false;
};

// "entailment" is positive, "neutral" and "contradiction" negative; "-" rows
// are skipped and counted.
std::vector<EntailText> read_entail_texts(const std::string& path, LoadStats* stats = nullptr);
std::vector<EntailExample> load_entail(const std::string& path, const Vocabulary& vocab,
                                       LoadStats* stats = nullptr);
void write_entail(const std::vector<EntailText>& pairs, const std::string& path);

Vocabulary load_vocab(const std::string& path);
void save_vocab(const Vocabulary& vocab, const std::string& path);

std::vector<NamedEdge> read_edges(const std::string& path);
void write_edges(std::span<const NamedEdge> edges, const std::string& path);
void write_pairs(const Taxonomy& taxonomy, const PairSet& pairs, const std::string& path);

// `#train`, `#dev`, `#test` sections of child<TAB>parent lines.
void write_split(const Taxonomy& taxonomy, const EdgeSplit& split, const std::string& path);
EdgeSplit read_split(const Taxonomy& taxonomy, const std::string& path);

// `#dev` and `#test` sections of child<TAB>parent<TAB>0|1 lines.
struct LabeledSplit {
  std::vector<LabeledPair> dev;
  std::vector<LabeledPair> test;
};
void write_labeled_pairs(const Taxonomy& taxonomy, const LabeledSplit& pairs,
                         const std::string& path);
LabeledSplit read_labeled_pairs(const Taxonomy& taxonomy, const std::string& path);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);
// Written to a temporary file and renamed into place.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string read_file(const std::string& path);
// Write to `path.tmp` then rename.
void write_file_atomic(const std::string& path, std::string_view bytes);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace oe
