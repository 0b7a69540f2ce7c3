#pragma once

#include <string>
#include <vector>

#include "nutri/embedding_store.hpp"

namespace nutri {

struct EmbedResult {
    std::vector<double> vector;
    std::string error;  // empty on success

    bool ok() const noexcept { return error.empty(); }
};

// Source of query embeddings. Inputs are already-normalized titles.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    // Throws ProviderError when the provider cannot be used at all.
    virtual void check_available() const {}

    // Throws ProviderError on failure.
    virtual std::vector<double> embed(const std::string& text) = 0;

    // One result per input, same order; per-item failures are reported in
    // EmbedResult::error. Whole-batch failures throw ProviderError.
    virtual std::vector<EmbedResult> embed_batch(const std::vector<std::string>& texts);
};

// Looks query embeddings up in a precomputed store keyed by normalized title.
class PrecomputedProvider final : public EmbeddingProvider {
public:
    explicit PrecomputedProvider(EmbeddingStore store);

    // For exporter output whose ids are line numbers "0", "1", ...: re-keys
    // every record by the normalized text of the matching line.
    static PrecomputedProvider from_line_keyed(const EmbeddingStore& store,
                                               const std::vector<std::string>& lines);

    std::vector<double> embed(const std::string& text) override;

    const EmbeddingStore& store() const noexcept { return store_; }

private:
    EmbeddingStore store_;
};

// Spawns an external embedder once per batch: texts go to its stdin one per
// line; it must answer with an NTEB stream on stdout whose ids are the line
// numbers and whose model tag carries "protocol=1".
class ProcessProvider final : public EmbeddingProvider {
public:
    explicit ProcessProvider(std::vector<std::string> argv);

    void check_available() const override;
    std::vector<double> embed(const std::string& text) override;
    std::vector<EmbedResult> embed_batch(const std::vector<std::string>& texts) override;

    // Model tag reported by the last successful call.
    const std::string& model_tag() const noexcept { return model_tag_; }

private:
    std::vector<std::string> argv_;
    std::string model_tag_;
};

inline constexpr const char* kProviderProtocolTag = "protocol=1";

}  // namespace nutri
