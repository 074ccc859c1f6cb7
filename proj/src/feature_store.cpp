#include "curation/feature_store.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <unordered_map>
#include <unordered_set>
#include <variant>

#include "curation/error.hpp"
#include "curation/json_io.hpp"
#include "curation/matrix.hpp"

static_assert(std::endian::native == std::endian::little, "feature store I/O assumes a little-endian host");

namespace curation {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'T', 'R'};

class MappedFile {
  public:
    explicit MappedFile(const std::filesystem::path& path) {
        fd_ = ::open(path.c_str(), O_RDONLY);
        if (fd_ < 0) {
            throw Error(ErrorCode::io, "cannot open store " + path.string() + ": " + std::strerror(errno));
        }
        struct stat st {};
        if (::fstat(fd_, &st) != 0) {
            ::close(fd_);
            throw Error(ErrorCode::io, "cannot stat store " + path.string());
        }
        size_ = static_cast<std::size_t>(st.st_size);
        if (size_ > 0) {
            void* p = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd_, 0);
            if (p == MAP_FAILED) {
                ::close(fd_);
                throw Error(ErrorCode::io, "cannot map store " + path.string());
            }
            data_ = static_cast<const std::byte*>(p);
        }
    }

    MappedFile(const MappedFile&) = delete;
    MappedFile& operator=(const MappedFile&) = delete;

    ~MappedFile() {
        if (data_ != nullptr) {
            ::munmap(const_cast<std::byte*>(data_), size_);
        }
        if (fd_ >= 0) {
            ::close(fd_);
        }
    }

    [[nodiscard]] std::span<const std::byte> bytes() const noexcept { return {data_, size_}; }

  private:
    int fd_ = -1;
    const std::byte* data_ = nullptr;
    std::size_t size_ = 0;
};

template <typename T>
T load(const std::byte* p) noexcept {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

template <typename T>
void append(std::vector<std::byte>& out, T v) {
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

bool all_finite(std::span<const float> values) {
    for (float v : values) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

std::uint32_t check_records(std::span<const FeatureRecord> records, std::span<const std::string> aux_names,
                            std::uint32_t dim) {
    if (!records.empty()) {
        dim = static_cast<std::uint32_t>(records.front().vector.size());
    }
    if (dim == 0 && !records.empty()) {
        throw Error(ErrorCode::invalid_argument, "feature vectors must have positive dimension");
    }
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(records.size());
    for (const auto& r : records) {
        if (r.vector.size() != dim) {
            throw Error(ErrorCode::dimension_mismatch, "record " + std::to_string(r.id) + " has dimension " +
                                                           std::to_string(r.vector.size()) + ", expected " +
                                                           std::to_string(dim));
        }
        if (r.aux.size() != aux_names.size()) {
            throw Error(ErrorCode::invalid_argument, "record " + std::to_string(r.id) + " has " +
                                                         std::to_string(r.aux.size()) + " aux values, schema has " +
                                                         std::to_string(aux_names.size()));
        }
        if (!all_finite(r.vector) || !all_finite(r.aux)) {
            throw Error(ErrorCode::non_finite, "record " + std::to_string(r.id) + " contains a non-finite value");
        }
        if (!seen.insert(r.id).second) {
            throw Error(ErrorCode::duplicate_id, "duplicate id " + std::to_string(r.id));
        }
    }
    return dim;
}

std::vector<std::byte> encode_store(std::span<const FeatureRecord> records, std::uint32_t dim,
                                    std::uint32_t aux_count) {
    std::vector<std::byte> out;
    out.reserve(kStoreHeaderSize + records.size() * (8 + 4 * (dim + aux_count)));
    for (char c : kMagic) {
        out.push_back(static_cast<std::byte>(c));
    }
    append<std::uint32_t>(out, kStoreVersion);
    append<std::uint32_t>(out, dim);
    append<std::uint64_t>(out, records.size());
    append<std::uint32_t>(out, aux_count);
    append<std::uint32_t>(out, 0);
    for (const auto& r : records) {
        append<std::uint64_t>(out, r.id);
    }
    for (const auto& r : records) {
        for (float v : r.vector) {
            append<float>(out, v);
        }
    }
    for (const auto& r : records) {
        for (float v : r.aux) {
            append<float>(out, v);
        }
    }
    return out;
}

std::string encode_meta(std::span<const FeatureRecord> records, std::span<const std::string> aux_names) {
    std::string out;
    const io::json names(std::vector<std::string>(aux_names.begin(), aux_names.end()));
    if (records.empty()) {
        if (!aux_names.empty()) {
            out += io::json{{"aux_names", names}}.dump() + "\n";
        }
        return out;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        io::json line = {{"id", records[i].id}, {"dataset", records[i].dataset}, {"key", records[i].key}};
        if (i == 0) {
            line["aux_names"] = names;
        }
        out += line.dump() + "\n";
    }
    return out;
}

}  // namespace

struct FeatureStore::Impl {
    std::variant<std::unique_ptr<MappedFile>, std::vector<std::byte>> storage;
    std::span<const std::byte> bytes;
    std::uint32_t dim = 0;
    std::uint64_t count = 0;
    std::uint32_t aux_count = 0;
    std::vector<std::string> aux_names;

    // Sidecar labels, loaded on first access.
    std::filesystem::path meta_path;
    std::string meta_text;  // in-memory stores keep their sidecar here
    mutable std::once_flag labels_once;
    mutable std::vector<std::string> datasets;
    mutable std::vector<std::string> keys;

    const std::byte* ids_base() const noexcept { return bytes.data() + kStoreHeaderSize; }
    const float* vectors_base() const noexcept {
        return reinterpret_cast<const float*>(ids_base() + count * sizeof(std::uint64_t));
    }
    const float* aux_base() const noexcept { return vectors_base() + count * dim; }

    void parse_header(const std::string& origin) {
        if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
            throw Error(ErrorCode::bad_magic, origin + ": not a feature store (bad magic)");
        }
        if (bytes.size() < kStoreHeaderSize) {
            throw Error(ErrorCode::truncated, origin + ": truncated header");
        }
        const auto version = load<std::uint32_t>(bytes.data() + 4);
        if (version != kStoreVersion) {
            throw Error(ErrorCode::unsupported_version,
                        origin + ": unsupported store version " + std::to_string(version));
        }
        dim = load<std::uint32_t>(bytes.data() + 8);
        count = load<std::uint64_t>(bytes.data() + 12);
        aux_count = load<std::uint32_t>(bytes.data() + 20);

        const std::uint64_t payload = bytes.size() - kStoreHeaderSize;
        const std::uint64_t stride = 8 + 4 * (static_cast<std::uint64_t>(dim) + aux_count);
        if (count > payload / stride) {
            throw Error(ErrorCode::truncated, origin + ": truncated payload (header declares " +
                                                  std::to_string(count) + " records of dimension " +
                                                  std::to_string(dim) + ")");
        }
        if (count * stride != payload) {
            throw Error(ErrorCode::parse, origin + ": " + std::to_string(payload - count * stride) +
                                              " trailing bytes after payload");
        }
    }

    void parse_aux_names(const std::string& first_line) {
        aux_names.clear();
        if (!first_line.empty()) {
            io::json j;
            try {
                j = io::json::parse(first_line);
            } catch (const io::json::exception& e) {
                throw Error(ErrorCode::parse, "metadata sidecar: " + std::string(e.what()));
            }
            if (j.contains("aux_names")) {
                aux_names = j.at("aux_names").get<std::vector<std::string>>();
            }
        }
        if (aux_names.empty() && aux_count > 0) {
            for (std::uint32_t a = 0; a < aux_count; ++a) {
                aux_names.push_back("aux_" + std::to_string(a));
            }
        }
        if (aux_names.size() != aux_count) {
            throw Error(ErrorCode::parse, "metadata sidecar lists " + std::to_string(aux_names.size()) +
                                              " aux names, store has " + std::to_string(aux_count));
        }
    }

    void load_labels() const {
        datasets.assign(count, std::string{});
        keys.assign(count, std::string{});
        std::string text = meta_text;
        if (!meta_path.empty()) {
            if (!std::filesystem::exists(meta_path)) {
                return;
            }
            text = io::read_file(meta_path);
        }
        std::unordered_map<std::uint64_t, std::size_t> row_of;
        row_of.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            row_of.emplace(load<std::uint64_t>(ids_base() + i * 8), i);
        }
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t end = text.find('\n', pos);
            if (end == std::string::npos) {
                end = text.size();
            }
            if (end > pos) {
                const auto j = io::json::parse(text.begin() + static_cast<std::ptrdiff_t>(pos),
                                               text.begin() + static_cast<std::ptrdiff_t>(end));
                if (j.contains("id")) {
                    const auto id = j.at("id").get<std::uint64_t>();
                    const auto it = row_of.find(id);
                    if (it == row_of.end()) {
                        throw Error(ErrorCode::unknown_id, "metadata sidecar mentions unknown id " + std::to_string(id));
                    }
                    datasets[it->second] = j.value("dataset", std::string{});
                    keys[it->second] = j.value("key", std::string{});
                }
            }
            pos = end + 1;
        }
    }
};

std::filesystem::path meta_path_for(const std::filesystem::path& store_path) {
    auto p = store_path;
    p.replace_extension(".meta.jsonl");
    return p;
}

StoreSummary write_store(std::span<const FeatureRecord> records, const std::filesystem::path& path,
                         std::span<const std::string> aux_names, std::uint32_t dim) {
    dim = check_records(records, aux_names, dim);
    const auto bytes = encode_store(records, dim, static_cast<std::uint32_t>(aux_names.size()));
    io::write_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    io::write_atomic(meta_path_for(path), encode_meta(records, aux_names));
    return {records.size(), dim};
}

FeatureStore FeatureStore::open(const std::filesystem::path& path) {
    auto impl = std::make_shared<Impl>();
    auto mapped = std::make_unique<MappedFile>(path);
    impl->bytes = mapped->bytes();
    impl->storage = std::move(mapped);
    impl->parse_header(path.string());

    impl->meta_path = meta_path_for(path);
    std::string first_line;
    if (std::ifstream meta(impl->meta_path); meta) {
        std::getline(meta, first_line);
    }
    impl->parse_aux_names(first_line);
    return FeatureStore(std::move(impl));
}

FeatureStore FeatureStore::from_records(std::span<const FeatureRecord> records,
                                        std::span<const std::string> aux_names, std::uint32_t dim) {
    dim = check_records(records, aux_names, dim);
    auto impl = std::make_shared<Impl>();
    impl->storage = encode_store(records, dim, static_cast<std::uint32_t>(aux_names.size()));
    const auto& owned = std::get<std::vector<std::byte>>(impl->storage);
    impl->bytes = owned;
    impl->parse_header("in-memory store");
    impl->meta_text = encode_meta(records, aux_names);
    impl->aux_names.assign(aux_names.begin(), aux_names.end());
    return FeatureStore(std::move(impl));
}

std::uint32_t FeatureStore::dim() const noexcept { return impl_->dim; }

std::size_t FeatureStore::size() const noexcept { return static_cast<std::size_t>(impl_->count); }

std::uint64_t FeatureStore::id(std::size_t row) const {
    return load<std::uint64_t>(impl_->ids_base() + row * sizeof(std::uint64_t));
}

std::span<const float> FeatureStore::row(std::size_t row) const {
    return {impl_->vectors_base() + row * impl_->dim, impl_->dim};
}

std::span<const float> FeatureStore::aux(std::size_t row) const {
    return {impl_->aux_base() + row * impl_->aux_count, impl_->aux_count};
}

const std::vector<std::string>& FeatureStore::aux_names() const noexcept { return impl_->aux_names; }

int FeatureStore::aux_index(const std::string& name) const {
    const auto& names = impl_->aux_names;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

const std::string& FeatureStore::dataset(std::size_t row) const {
    std::call_once(impl_->labels_once, [this] { impl_->load_labels(); });
    return impl_->datasets[row];
}

const std::string& FeatureStore::key(std::size_t row) const {
    std::call_once(impl_->labels_once, [this] { impl_->load_labels(); });
    return impl_->keys[row];
}

FeatureRecord FeatureStore::record(std::size_t row) const {
    const auto v = this->row(row);
    const auto a = aux(row);
    return {id(row), dataset(row), key(row), {v.begin(), v.end()}, {a.begin(), a.end()}};
}

ValidationReport validate_store(const FeatureStore& store) {
    ValidationReport report;
    std::unordered_map<std::uint64_t, std::size_t> first_row;
    first_row.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto id = store.id(i);
        if (!all_finite(store.row(i))) {
            report.issues.push_back({StoreIssue::Kind::non_finite_vector, id, i,
                                     "record " + std::to_string(id) + " has a non-finite vector element"});
        }
        if (!all_finite(store.aux(i))) {
            report.issues.push_back({StoreIssue::Kind::non_finite_aux, id, i,
                                     "record " + std::to_string(id) + " has a non-finite aux value"});
        }
        const auto [it, inserted] = first_row.emplace(id, i);
        if (!inserted) {
            report.issues.push_back({StoreIssue::Kind::duplicate_id, id, i,
                                     "id " + std::to_string(id) + " appears at rows " + std::to_string(it->second) +
                                         " and " + std::to_string(i)});
        }
    }
    report.ok = report.issues.empty();
    return report;
}

FeatureMatrix FeatureMatrix::gather(const FeatureStore& store, std::span<const std::size_t> rows) {
    FeatureMatrix m(rows.size(), store.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = store.row(rows[i]);
        auto dst = m.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return m;
}

FeatureMatrix FeatureMatrix::from_store(const FeatureStore& store) {
    FeatureMatrix m(store.size(), store.dim());
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto src = store.row(i);
        auto dst = m.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return m;
}

}  // namespace curation
