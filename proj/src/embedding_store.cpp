#include "nutri/embedding_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "nutri/errors.hpp"

namespace nutri {

EmbeddingStore::EmbeddingStore(std::uint32_t dimension, std::string model_tag)
    : dimension_(dimension), model_tag_(std::move(model_tag)) {
    if (dimension_ == 0) throw DimensionError("embedding dimension must be positive");
    if (model_tag_.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw FormatError("model tag longer than 65535 bytes");
    }
}

void EmbeddingStore::add(std::string id, std::vector<float> vector) {
    if (vector.size() != dimension_) {
        throw DimensionError("vector for '" + id + "' has " + std::to_string(vector.size()) +
                             " components, store dimension is " + std::to_string(dimension_));
    }
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw FormatError("embedding id longer than 65535 bytes");
    }
    for (float x : vector) {
        if (!std::isfinite(x)) throw FormatError("non-finite component in vector for '" + id + "'");
    }
    if (by_id_.contains(id)) throw ConsistencyError("duplicate embedding id '" + id + "'");
    by_id_.emplace(id, records_.size());
    records_.push_back(EmbeddingRecord{std::move(id), std::move(vector)});
}

const EmbeddingRecord* EmbeddingStore::find(std::string_view id) const {
    const auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

bool EmbeddingStore::operator==(const EmbeddingStore& other) const {
    if (dimension_ != other.dimension_ || model_tag_ != other.model_tag_ ||
        records_.size() != other.records_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& a = records_[i];
        const auto& b = other.records_[i];
        if (a.id != b.id) return false;
        // bitwise, so -0.0 and 0.0 differ
        if (std::memcmp(a.vector.data(), b.vector.data(), a.vector.size() * sizeof(float)) != 0) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// NTEB encoding
// ---------------------------------------------------------------------------

namespace {

class LeWriter {
public:
    explicit LeWriter(std::ostream& out) : out_(out) {}

    template <typename T>
    void put_uint(T v) {
        unsigned char buf[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf[i] = static_cast<unsigned char>(v >> (8 * i));
        }
        write(buf, sizeof buf);
    }

    void put_f32(float v) { put_uint(std::bit_cast<std::uint32_t>(v)); }

    void put_string16(std::string_view s) {
        put_uint(static_cast<std::uint16_t>(s.size()));
        write(s.data(), s.size());
    }

    void write(const void* data, std::size_t n) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
        if (!out_) throw IoError("write failure on embedding store sink");
        written_ += n;
    }

    std::uint64_t written() const { return written_; }

private:
    std::ostream& out_;
    std::uint64_t written_ = 0;
};

class LeReader {
public:
    explicit LeReader(std::istream& in) : in_(in) {}

    void read(void* dst, std::size_t n, const char* what) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        const auto got = static_cast<std::size_t>(in_.gcount());
        if (got != n) {
            throw CorruptionError(std::string("truncated embedding store while reading ") + what,
                                  offset_ + got);
        }
        offset_ += n;
    }

    template <typename T>
    T get_uint(const char* what) {
        unsigned char buf[sizeof(T)];
        read(buf, sizeof buf, what);
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
        return v;
    }

    float get_f32(const char* what) { return std::bit_cast<float>(get_uint<std::uint32_t>(what)); }

    std::string get_string16(const char* what) {
        const auto len = get_uint<std::uint16_t>(what);
        std::string s(len, '\0');
        read(s.data(), len, what);
        return s;
    }

    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
    std::uint64_t offset() const { return offset_; }

private:
    std::istream& in_;
    std::uint64_t offset_ = 0;
};

}  // namespace

std::uint64_t write_store(const EmbeddingStore& store, std::ostream& out) {
    LeWriter w(out);
    w.write(kNtebMagic, sizeof kNtebMagic);
    w.put_uint<std::uint32_t>(kNtebVersion);
    w.put_uint<std::uint32_t>(store.dimension());
    w.put_uint<std::uint64_t>(store.size());
    w.put_string16(store.model_tag());
    for (const auto& rec : store.records()) {
        w.put_string16(rec.id);
        for (float x : rec.vector) w.put_f32(x);
    }
    out.flush();
    if (!out) throw IoError("flush failure on embedding store sink");
    return w.written();
}

EmbeddingStore read_store(std::istream& in) {
    LeReader r(in);
    char magic[4];
    r.read(magic, sizeof magic, "magic");
    if (std::memcmp(magic, kNtebMagic, sizeof magic) != 0) {
        throw FormatError("bad magic: not an NTEB embedding store");
    }
    const auto version = r.get_uint<std::uint32_t>("version");
    if (version != kNtebVersion) {
        throw FormatError("unsupported NTEB version " + std::to_string(version));
    }
    const auto dimension = r.get_uint<std::uint32_t>("dimension");
    if (dimension == 0) throw FormatError("NTEB dimension must be positive");
    const auto count = r.get_uint<std::uint64_t>("record count");
    EmbeddingStore store(dimension, r.get_string16("model tag"));

    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t record_offset = r.offset();
        std::string id = r.get_string16("record id");
        std::vector<float> v(dimension);
        for (auto& x : v) x = r.get_f32("vector component");
        try {
            store.add(std::move(id), std::move(v));
        } catch (const Error& e) {
            throw FormatError(std::string(e.what()) + " (record at byte offset " +
                              std::to_string(record_offset) + ")");
        }
    }
    if (!r.at_end()) {
        throw FormatError("trailing bytes after " + std::to_string(count) +
                          " records at byte offset " + std::to_string(r.offset()));
    }
    return store;
}

EmbeddingStore read_store_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding store " + path);
    return read_store(in);
}

void write_store_file(const EmbeddingStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create embedding store " + path);
    write_store(store, out);
}

// ---------------------------------------------------------------------------
// Vector math
// ---------------------------------------------------------------------------

namespace {

template <typename T>
double norm_of(std::span<const T> v) {
    double sum = 0.0;
    for (T x : v) sum += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(sum);
}

template <typename T>
std::vector<double> normalize_impl(std::span<const T> v) {
    const double norm = norm_of(v);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw DegenerateVectorError("cannot normalize a zero or non-finite vector");
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]) / norm;
    return out;
}

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) {
        throw DimensionError("cosine similarity of vectors with dimensions " +
                             std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    const double na = norm_of(a);
    const double nb = norm_of(b);
    if (!(na > 0.0) || !(nb > 0.0)) {
        throw DegenerateVectorError("cosine similarity of a zero vector");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return std::clamp(dot / (na * nb), -1.0, 1.0);
}

}  // namespace

std::vector<double> unit_normalize(std::span<const double> v) { return normalize_impl(v); }
std::vector<double> unit_normalize(std::span<const float> v) { return normalize_impl(v); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    return cosine_impl(a, b);
}
double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    return cosine_impl(a, b);
}

}  // namespace nutri
