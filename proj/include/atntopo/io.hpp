#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "atntopo/classify.hpp"
#include "atntopo/features.hpp"
#include "atntopo/scoring.hpp"
#include "atntopo/types.hpp"

namespace atntopo {

namespace fs = std::filesystem;

inline constexpr char kContainerMagic[4] = {'A', 'T', 'N', 'B'};
inline constexpr std::uint16_t kContainerVersion = 1;
/// magic + version + L + H + n + reserved
inline constexpr std::size_t kContainerHeaderBytes = 4 + 2 * 5;

/// One sentence's attention tensor plus its token manifest.
struct AttentionContainer {
    std::string sentence_id;
    std::string model;
    AttentionGrid grid;
    /// Non-fatal findings from reading, e.g. rows that do not sum to one.
    std::vector<std::string> warnings;
};

/// Expected file size for an L x H x n x n container.
std::size_t container_byte_size(std::size_t layers, std::size_t heads, std::size_t n);

/// Binary payload (header + float32 values). Values are narrowed to float32.
std::string encode_container(const AttentionContainer& c);
nlohmann::json encode_manifest(const AttentionContainer& c);

/// Parses the binary payload and its manifest. Throws std::runtime_error on
/// bad magic, unsupported version, truncation, trailing bytes, NaN values or
/// a manifest whose token count differs from n.
AttentionContainer decode_container(std::string_view bytes, const nlohmann::json& manifest, double row_tol = 1e-4);

/// Sidecar manifest path: same stem, ".json" extension.
fs::path manifest_path(const fs::path& container);

void write_container(const fs::path& path, const AttentionContainer& c);
AttentionContainer read_container(const fs::path& path, double row_tol = 1e-4);

nlohmann::json meta_to_json(const TokenMeta& meta);
TokenMeta meta_from_json(const nlohmann::json& j);

struct SentenceRecord {
    std::string id;
    int label = 0;
    std::string sentence;
    fs::path attention;
};

/// Tab-separated id, label, sentence, attention. A first line starting with
/// "id\t" is treated as a header. Attention paths resolve relative to the file.
std::vector<SentenceRecord> read_sentences(const fs::path& path);

struct PairRecord {
    std::string sentence_good;
    std::string sentence_bad;
    std::string phenomenon;
    std::string pair_type;
    fs::path good_attention;
    fs::path bad_attention;
};

/// One JSON object per line; blank lines are skipped.
std::vector<PairRecord> read_pairs(const fs::path& path);

/// Loads both containers; the good sentence is side A.
MinimalPair load_pair(const PairRecord& r);

struct FeatureRow {
    std::string id;
    int label = 0;
    FeatureVector features;
};

/// TSV: "#schema=<version>" line, header "id\tlabel\t<names...>", one row per sentence.
/// Throws std::invalid_argument if rows disagree on feature names.
void write_feature_table(const fs::path& path, const std::vector<FeatureRow>& rows);
LabeledDataset read_feature_table(const fs::path& path);

inline constexpr char kModelMagic[4] = {'A', 'T', 'N', 'M'};
inline constexpr std::uint16_t kModelVersion = 1;

struct SavedModel {
    Pipeline pipeline;
    std::vector<std::string> feature_names;
};

void write_model(const fs::path& path, const SavedModel& m);
SavedModel read_model(const fs::path& path);

inline constexpr std::string_view kHeadManifestFormat = "atntopo-heads/1";

struct SelectedConfig {
    std::string phenomenon;  // empty for corpus-wide selections
    HeadConfig config;
    double selection_accuracy = 0.0;
};

struct HeadManifest {
    HeadMode mode = HeadMode::Top;
    std::uint64_t seed = 0;
    std::size_t beam_cap = 40;
    std::vector<SelectedConfig> configs;

    /// Config for a phenomenon, falling back to the corpus-wide entry.
    /// Throws std::out_of_range when neither exists.
    const SelectedConfig& for_phenomenon(std::string_view phenomenon) const;
};

nlohmann::json head_manifest_to_json(const HeadManifest& m);
HeadManifest head_manifest_from_json(const nlohmann::json& j);

/// Runs `fill` on a temporary sibling of `path` and renames it into place.
/// The temporary is removed if `fill` throws.
void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& fill, bool binary = false);

/// Shortest round-trip decimal for a double.
std::string format_double(double v);

std::string read_file(const fs::path& path);

}  // namespace atntopo
