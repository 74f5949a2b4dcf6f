#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "traceforge/core.hpp"
#include "traceforge/gateway.hpp"
#include "traceforge/prompts.hpp"

namespace traceforge {

/// Text an example is indexed under: its instruction plus every
/// observation text, newline-joined. Actions are not indexed.
std::string indexed_text(const Example& example);

/// Observation texts only, newline-joined; the field scanned by the
/// exact-containment boost.
std::string observation_text(const Example& example);

/// Added to a BM25 score when the whole query observation occurs verbatim
/// inside an example's observation text, so exact state matches dominate
/// the ranking.
inline constexpr double kContainmentBoost = 1e6;

/// Sparse queries are clipped to this many leading tokens.
inline constexpr int kMaxSparseQueryTokens = 512;

/// Okapi BM25 inverted index. Immutable after build; query_count is
/// instrumentation for callers that need to assert retrieval activity.
struct SparseIndex {
    double k1 = 1.2;
    double b = 0.75;
    double avg_doc_length = 0.0;
    std::map<std::string, int> doc_lengths;                                  // id -> token count
    std::map<std::string, std::vector<std::pair<std::string, int>>> postings;  // term -> [(id, tf)]
    std::map<std::string, std::string> containment_text;                     // id -> observation text
    std::shared_ptr<std::atomic<uint64_t>> query_count =
        std::make_shared<std::atomic<uint64_t>>(0);
};

/// Builds the inverted index over a corpus. Throws PreconditionError on an
/// empty corpus.
SparseIndex build_sparse(const std::vector<Example>& examples, double k1 = 1.2, double b = 0.75);

/// Top-m1 examples by BM25 score of the observation text, plus the
/// exact-containment boost. Ties break by example id ascending.
std::vector<RetrievalHit> query_sparse(const SparseIndex& index,
                                       const std::string& observation_text, int m1);

/// Deterministic text-to-vector interface; output dimension is fixed per
/// embedder id.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(const std::string& text) const = 0;
    virtual int dimension() const = 0;
    virtual std::string id() const = 0;
};

/// Test-friendly deterministic embedder: hashed bag of words over the
/// shared tokenizer, L2-normalized. Throws PreconditionError for text with
/// no tokens (the zero vector has no direction).
class HashedBagEmbedder : public Embedder {
public:
    explicit HashedBagEmbedder(int dimension = 64);
    std::vector<double> embed(const std::string& text) const override;
    int dimension() const override;
    std::string id() const override;

private:
    int dimension_;
};

/// Exact-scan dense index of unit-norm vectors.
struct DenseIndex {
    int dimension = 0;
    std::string embedder_id;
    std::map<std::string, std::vector<double>> vectors;  // id -> unit vector
    std::shared_ptr<std::atomic<uint64_t>> query_count =
        std::make_shared<std::atomic<uint64_t>>(0);
};

DenseIndex build_dense(const std::vector<Example>& examples, const Embedder& embedder);

/// Top-m2 examples by cosine similarity to the query, skipping excluded
/// ids. Ties break by example id ascending.
std::vector<RetrievalHit> query_dense(const DenseIndex& index, const std::string& query, int m2,
                                      const std::set<std::string>& exclude,
                                      const Embedder& embedder);

/// Asks the model for a retrieval query given instruction, history and
/// observation. Falls back to instruction + last observation when the
/// provider fails, logging the degradation.
std::string write_retrieval_query(const std::string& instruction, const prompts::History& history,
                                  const std::string& observation, Provider& provider,
                                  std::ostream* log = nullptr);

struct RetrievalIndexes {
    const SparseIndex* sparse = nullptr;
    const DenseIndex* dense = nullptr;
    const Embedder* embedder = nullptr;
};

/// Per-step retrieval: observation-based hits first, then model-based hits
/// excluding them. At most m1 + m2 hits, duplicate-free. A failing channel
/// degrades to the other one.
std::vector<RetrievalHit> agentic_retrieve(const std::string& instruction,
                                           const prompts::History& history,
                                           const std::string& observation, int m1, int m2,
                                           const RetrievalIndexes& indexes, Provider& provider,
                                           std::ostream* log = nullptr);

json sparse_to_json(const SparseIndex& index);
SparseIndex sparse_from_json(const json& j);
void save_sparse(const SparseIndex& index, const std::string& path);
SparseIndex load_sparse(const std::string& path);

json dense_to_json(const DenseIndex& index);
DenseIndex dense_from_json(const json& j);
void save_dense(const DenseIndex& index, const std::string& path);
DenseIndex load_dense(const std::string& path);

}  // namespace traceforge
