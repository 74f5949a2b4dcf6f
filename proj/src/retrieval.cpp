#include "traceforge/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "traceforge/util.hpp"

namespace traceforge {

namespace {

// Smoothed Okapi idf, non-negative for every document frequency:
//   idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
double okapi_idf(int df, int corpus_size) {
    return std::log(1.0 + (corpus_size - df + 0.5) / (df + 0.5));
}

std::vector<RetrievalHit> take_top(std::vector<RetrievalHit> hits, int limit) {
    std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.example_id < b.example_id;
    });
    if (static_cast<int>(hits.size()) > limit) hits.resize(static_cast<size_t>(limit));
    return hits;
}

}  // namespace

std::string observation_text(const Example& example) {
    std::string out;
    for (size_t k = 0; k < example.trajectory.observations.size(); ++k) {
        if (k > 0) out += "\n";
        out += example.trajectory.observations[k].text;
    }
    return out;
}

std::string indexed_text(const Example& example) {
    return example.instruction + "\n" + observation_text(example);
}

SparseIndex build_sparse(const std::vector<Example>& examples, double k1, double b) {
    if (examples.empty()) throw PreconditionError("cannot build a sparse index over an empty corpus");
    SparseIndex index;
    index.k1 = k1;
    index.b = b;
    long total_length = 0;
    for (const auto& example : examples) {
        auto tokens = tokenize(indexed_text(example));
        index.doc_lengths[example.id] = static_cast<int>(tokens.size());
        index.containment_text[example.id] = observation_text(example);
        total_length += static_cast<long>(tokens.size());
        std::map<std::string, int> counts;
        for (auto& t : tokens) ++counts[t];
        for (auto& [term, tf] : counts) {
            index.postings[term].emplace_back(example.id, tf);
        }
    }
    index.avg_doc_length = static_cast<double>(total_length) / static_cast<double>(examples.size());
    for (auto& [term, posting] : index.postings) {
        std::sort(posting.begin(), posting.end());
    }
    return index;
}

std::vector<RetrievalHit> query_sparse(const SparseIndex& index,
                                       const std::string& observation_text, int m1) {
    index.query_count->fetch_add(1);
    if (m1 <= 0) return {};

    auto terms = tokenize(observation_text);
    if (static_cast<int>(terms.size()) > kMaxSparseQueryTokens) {
        terms.resize(kMaxSparseQueryTokens);
    }
    std::map<std::string, int> query_tf;
    for (auto& t : terms) ++query_tf[t];

    const int corpus_size = static_cast<int>(index.doc_lengths.size());
    std::map<std::string, double> scores;
    for (const auto& [term, qtf] : query_tf) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        double idf = okapi_idf(static_cast<int>(it->second.size()), corpus_size);
        for (const auto& [id, tf] : it->second) {
            double dl = index.doc_lengths.at(id);
            double norm = tf + index.k1 * (1.0 - index.b + index.b * dl / index.avg_doc_length);
            scores[id] += qtf * idf * (tf * (index.k1 + 1.0)) / norm;
        }
    }
    for (const auto& [id, text] : index.containment_text) {
        if (!observation_text.empty() && text.find(observation_text) != std::string::npos) {
            scores[id] += kContainmentBoost;
        }
    }

    std::vector<RetrievalHit> hits;
    hits.reserve(scores.size());
    for (const auto& [id, score] : scores) {
        hits.push_back(RetrievalHit{id, score, HitSource::ObservationBased});
    }
    return take_top(std::move(hits), m1);
}

HashedBagEmbedder::HashedBagEmbedder(int dimension) : dimension_(dimension) {
    if (dimension < 1) throw PreconditionError("embedder dimension must be positive");
}

std::vector<double> HashedBagEmbedder::embed(const std::string& text) const {
    auto tokens = tokenize(text);
    if (tokens.empty()) {
        throw PreconditionError("cannot embed text with no tokens");
    }
    std::vector<double> vec(static_cast<size_t>(dimension_), 0.0);
    for (const auto& t : tokens) {
        vec[fnv1a64(t) % static_cast<uint64_t>(dimension_)] += 1.0;
    }
    double norm = 0.0;
    for (double v : vec) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : vec) v /= norm;
    return vec;
}

int HashedBagEmbedder::dimension() const { return dimension_; }

std::string HashedBagEmbedder::id() const {
    return "hashed-bow-" + std::to_string(dimension_);
}

DenseIndex build_dense(const std::vector<Example>& examples, const Embedder& embedder) {
    if (examples.empty()) throw PreconditionError("cannot build a dense index over an empty corpus");
    DenseIndex index;
    index.dimension = embedder.dimension();
    index.embedder_id = embedder.id();
    for (const auto& example : examples) {
        index.vectors[example.id] = embedder.embed(indexed_text(example));
    }
    return index;
}

std::vector<RetrievalHit> query_dense(const DenseIndex& index, const std::string& query, int m2,
                                      const std::set<std::string>& exclude,
                                      const Embedder& embedder) {
    index.query_count->fetch_add(1);
    if (m2 <= 0) return {};
    auto q = embedder.embed(query);
    if (static_cast<int>(q.size()) != index.dimension) {
        throw PreconditionError("query embedding dimension mismatch");
    }
    std::vector<RetrievalHit> hits;
    for (const auto& [id, vec] : index.vectors) {
        if (exclude.count(id) > 0) continue;
        double dot = 0.0;
        for (size_t k = 0; k < vec.size(); ++k) dot += vec[k] * q[k];
        hits.push_back(RetrievalHit{id, dot, HitSource::ModelBased});
    }
    return take_top(std::move(hits), m2);
}

std::string write_retrieval_query(const std::string& instruction, const prompts::History& history,
                                  const std::string& observation, Provider& provider,
                                  std::ostream* log) {
    CompletionRequest request;
    request.prompt = prompts::render_query(instruction, history, observation);
    try {
        std::string text = complete(request, provider);
        size_t b = text.find_first_not_of(" \t\r\n");
        size_t e = text.find_last_not_of(" \t\r\n");
        if (b == std::string::npos) throw ParseError("empty query completion");
        return text.substr(b, e - b + 1);
    } catch (const Error& e) {
        log_event(log, "query_fallback", {{"error", e.what()}});
        return instruction + "\n" + observation;
    }
}

std::vector<RetrievalHit> agentic_retrieve(const std::string& instruction,
                                           const prompts::History& history,
                                           const std::string& observation, int m1, int m2,
                                           const RetrievalIndexes& indexes, Provider& provider,
                                           std::ostream* log) {
    std::vector<RetrievalHit> hits;
    std::set<std::string> seen;

    if (indexes.sparse != nullptr && m1 > 0) {
        try {
            for (auto& hit : query_sparse(*indexes.sparse, observation, m1)) {
                seen.insert(hit.example_id);
                hits.push_back(std::move(hit));
            }
        } catch (const Error& e) {
            log_event(log, "sparse_channel_failed", {{"error", e.what()}});
        }
    }

    if (indexes.dense != nullptr && indexes.embedder != nullptr && m2 > 0) {
        try {
            std::string query = write_retrieval_query(instruction, history, observation, provider, log);
            for (auto& hit : query_dense(*indexes.dense, query, m2, seen, *indexes.embedder)) {
                hits.push_back(std::move(hit));
            }
        } catch (const Error& e) {
            log_event(log, "dense_channel_failed", {{"error", e.what()}});
        }
    }
    return hits;
}

json sparse_to_json(const SparseIndex& index) {
    json postings = json::object();
    for (const auto& [term, posting] : index.postings) {
        json rows = json::array();
        for (const auto& [id, tf] : posting) rows.push_back({id, tf});
        postings[term] = rows;
    }
    return {{"version", 1},
            {"kind", "sparse"},
            {"k1", index.k1},
            {"b", index.b},
            {"avg_doc_length", index.avg_doc_length},
            {"doc_lengths", index.doc_lengths},
            {"postings", postings},
            {"containment_text", index.containment_text}};
}

SparseIndex sparse_from_json(const json& j) {
    SparseIndex index;
    index.k1 = j.at("k1").get<double>();
    index.b = j.at("b").get<double>();
    index.avg_doc_length = j.at("avg_doc_length").get<double>();
    index.doc_lengths = j.at("doc_lengths").get<std::map<std::string, int>>();
    index.containment_text = j.at("containment_text").get<std::map<std::string, std::string>>();
    for (const auto& [term, rows] : j.at("postings").items()) {
        auto& posting = index.postings[term];
        for (const auto& row : rows) {
            posting.emplace_back(row.at(0).get<std::string>(), row.at(1).get<int>());
        }
    }
    return index;
}

void save_sparse(const SparseIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write sparse index: " + path);
    out << sparse_to_json(index).dump() << "\n";
}

SparseIndex load_sparse(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sparse index: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("invalid sparse index JSON in " + path + ": " + e.what());
    }
    return sparse_from_json(j);
}

json dense_to_json(const DenseIndex& index) {
    return {{"version", 1},
            {"kind", "dense"},
            {"dimension", index.dimension},
            {"embedder_id", index.embedder_id},
            {"vectors", index.vectors}};
}

DenseIndex dense_from_json(const json& j) {
    DenseIndex index;
    index.dimension = j.at("dimension").get<int>();
    index.embedder_id = j.at("embedder_id").get<std::string>();
    index.vectors = j.at("vectors").get<std::map<std::string, std::vector<double>>>();
    return index;
}

void save_dense(const DenseIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write dense index: " + path);
    out << dense_to_json(index).dump() << "\n";
}

DenseIndex load_dense(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dense index: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("invalid dense index JSON in " + path + ": " + e.what());
    }
    return dense_from_json(j);
}

}  // namespace traceforge
