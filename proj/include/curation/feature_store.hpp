#pragma once

// Fixed-stride binary feature store (`.fst`) with a JSON-lines metadata sidecar.
//
// Layout (all integers little-endian):
//
//   offset  size  field
//   0       4     magic "FSTR"
//   4       4     version (u32, = 1)
//   8       4     dim (u32)
//   12      8     count (u64)
//   20      4     aux_count (u32)
//   24      4     reserved (u32, = 0)
//   28      8N    ids (u64)
//   ...     4ND   vectors (f32, row-major)
//   ...     4NA   aux scalars (f32, row-major)
//
// The sidecar `<stem>.meta.jsonl` holds one object per record with the dataset
// label and source key; the first line also carries "aux_names".

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace curation {

struct FeatureRecord {
    std::uint64_t id = 0;
    std::string dataset;
    std::string key;
    std::vector<float> vector;
    std::vector<float> aux;
};

struct StoreSummary {
    std::uint64_t count = 0;
    std::uint32_t dim = 0;
};

inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::size_t kStoreHeaderSize = 28;

/// Sidecar path for a store path: "dir/pool.fst" -> "dir/pool.meta.jsonl".
std::filesystem::path meta_path_for(const std::filesystem::path& store_path);

/// Writes `records` as a store at `path` plus its metadata sidecar. Both files
/// are written to temporaries and renamed into place. `dim` is only consulted
/// when `records` is empty.
StoreSummary write_store(std::span<const FeatureRecord> records, const std::filesystem::path& path,
                         std::span<const std::string> aux_names = {}, std::uint32_t dim = 0);

/// Read-only view over a store. Copies share the underlying mapping.
///
/// Opening reads and checks the header and the first sidecar line only; row
/// accessors touch just the bytes of that row. Dataset labels and keys are
/// loaded from the sidecar on first use.
class FeatureStore {
  public:
    static FeatureStore open(const std::filesystem::path& path);

    /// In-memory store with the same byte layout as the on-disk format.
    static FeatureStore from_records(std::span<const FeatureRecord> records,
                                     std::span<const std::string> aux_names = {}, std::uint32_t dim = 0);

    [[nodiscard]] std::uint32_t dim() const noexcept;
    [[nodiscard]] std::size_t size() const noexcept;
    [[nodiscard]] bool empty() const noexcept { return size() == 0; }

    [[nodiscard]] std::uint64_t id(std::size_t row) const;
    [[nodiscard]] std::span<const float> row(std::size_t row) const;
    [[nodiscard]] std::span<const float> aux(std::size_t row) const;

    [[nodiscard]] const std::vector<std::string>& aux_names() const noexcept;
    /// Column of the aux channel `name`, or -1 when absent.
    [[nodiscard]] int aux_index(const std::string& name) const;

    /// Dataset label of a row; empty when the store has no sidecar.
    [[nodiscard]] const std::string& dataset(std::size_t row) const;
    [[nodiscard]] const std::string& key(std::size_t row) const;

    /// Materializes one record (vector and aux copied out).
    [[nodiscard]] FeatureRecord record(std::size_t row) const;

    struct Impl;

  private:
    explicit FeatureStore(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

struct StoreIssue {
    enum class Kind { non_finite_vector, non_finite_aux, duplicate_id };
    Kind kind;
    std::uint64_t id;
    std::size_t row;
    std::string message;
};

struct ValidationReport {
    bool ok = true;
    std::vector<StoreIssue> issues;
};

/// Full scan for non-finite values and duplicate ids. Never throws for data
/// problems; they are returned as issues.
ValidationReport validate_store(const FeatureStore& store);

}  // namespace curation
