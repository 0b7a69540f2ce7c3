#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nutri {

struct EmbeddingRecord {
    std::string id;
    std::vector<float> vector;

    bool operator==(const EmbeddingRecord&) const = default;
};

// Ordered id -> dense vector mapping. Every vector has `dimension()`
// finite components and ids are unique.
class EmbeddingStore {
public:
    explicit EmbeddingStore(std::uint32_t dimension, std::string model_tag = {});

    std::uint32_t dimension() const noexcept { return dimension_; }
    const std::string& model_tag() const noexcept { return model_tag_; }
    const std::vector<EmbeddingRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }

    // Throws DimensionError, FormatError (non-finite component, oversized id)
    // or ConsistencyError (duplicate id).
    void add(std::string id, std::vector<float> vector);

    const EmbeddingRecord* find(std::string_view id) const;

    bool operator==(const EmbeddingStore& other) const;

private:
    std::uint32_t dimension_;
    std::string model_tag_;
    std::vector<EmbeddingRecord> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// NTEB v1:
//   "NTEB" | u32 version=1 | u32 dimension | u64 count | u16 len + model_tag
//   then per record: u16 len + id bytes, dimension x f32
// All integers and floats little-endian, no padding.
inline constexpr char kNtebMagic[4] = {'N', 'T', 'E', 'B'};
inline constexpr std::uint32_t kNtebVersion = 1;

std::uint64_t write_store(const EmbeddingStore& store, std::ostream& out);
EmbeddingStore read_store(std::istream& in);

EmbeddingStore read_store_file(const std::string& path);
void write_store_file(const EmbeddingStore& store, const std::string& path);

// Throws DegenerateVectorError for all-zero input.
std::vector<double> unit_normalize(std::span<const double> v);
std::vector<double> unit_normalize(std::span<const float> v);

double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const float> a, std::span<const float> b);

}  // namespace nutri
