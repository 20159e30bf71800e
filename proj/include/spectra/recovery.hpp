#pragma once

// Recovering order-theoretic structure from computable copies: embedding
// counts, uniquely embeddable initial segments, on-line successor recovery
// from the (<, fimg) oracle view, the successor-to-f reduction, and the
// semi-embedding search used when a construction repairs its session.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spectra/blocks.hpp"
#include "spectra/copies.hpp"
#include "spectra/structure.hpp"

namespace spectra {

// Number of strictly increasing phi : [0,|b|) -> [0,n) with
// f(phi(k)) = phi(b.fvals[k]) for every k, counting at most `cap` (0 = no
// cap). Images need not be contiguous. Requires f defined on [0,n).
uint64_t count_embeddings(const FiniteStructure& b, const BlockFunction& f, uint64_t n,
                          uint64_t cap);

struct SegmentSequence {
  std::vector<uint64_t> lengths;           // ascending
  std::vector<FiniteStructure> segments;   // segments[i] = fvals prefix of that length
};

// Initial segments of (omega, f) cut at block boundaries of [0,n) that embed
// into [0,n) exactly once (the identity embedding). Empty result when the
// prefix fails to decompose.
SegmentSequence unique_segments(const BlockFunction& f, uint64_t n);

struct RecoverResult {
  enum class Kind : uint8_t { Ok, Exhausted };
  Kind kind = Kind::Exhausted;
  uint64_t successor = 0;  // name of the <-successor of x (valid when Ok)
  uint64_t queries_used = 0;
  std::vector<std::string> trace;  // reveal / segment-confirmed / answer lines
};

// Find the successor of name x in the copy, consulting only less() and
// fimg(). Elements are revealed name by name and kept sorted; whenever the
// least-|B| prefix of revealed elements embeds a uniquely embeddable segment
// B, that prefix is certified to be the true initial segment of the copy, and
// x's successor is read off the first certified segment holding x non-finally.
// The budget caps oracle queries.
RecoverResult recover_successor(const CopyOracle& o, const SegmentSequence& segs, uint64_t x,
                                uint64_t query_budget);

struct ReduceResult {
  uint64_t answer = 0;  // name of the element at position f(pos(x))
  uint64_t queries_used = 0;
};

// Compute fimg(x) from successor queries alone, given the least element of
// the copy as non-uniform advice: walk the successor chain to locate x's
// position p, extend it to position f(p), and read off the name there.
ReduceResult reduce_f_to_succ(const CopyOracle& o, uint64_t least_name, uint64_t x,
                              const BlockFunction& f, uint64_t query_budget);

// --- semi-embeddings --------------------------------------------------------

// A construction's view of its session: consecutive chunks, each either a
// whole block appended as a unit (marked, shape recorded at append time) or
// a single unconstrained element. Chunk name lists must be consecutive in
// the session order.
struct MarkedChunk {
  bool marked = false;
  FiniteStructure shape;         // meaningful when marked
  std::vector<uint64_t> names;   // in session order
};

struct MarkedPrefix {
  std::vector<MarkedChunk> chunks;
};

struct SemiEmbedding {
  std::vector<uint64_t> image;  // image[i] = host position of the i-th session element
};

// Deterministic leftmost-first search for an order-preserving injection of
// the session into host positions [0, range_len) such that marked chunks land
// contiguously on host blocks of equal shape and elements at session
// positions below fixed_floor map to themselves. nullopt when none exists.
std::optional<SemiEmbedding> find_semi_embedding(const CopySession& session,
                                                 const MarkedPrefix& marks,
                                                 const BlockFunction& f, uint64_t range_len,
                                                 uint64_t fixed_floor);

// Independent re-check of every clause above.
bool verify_semi_embedding(const CopySession& session, const MarkedPrefix& marks,
                           const BlockFunction& f, const SemiEmbedding& xi, uint64_t range_len,
                           uint64_t fixed_floor);

}  // namespace spectra
