#include "spectra/recovery.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace spectra {
namespace {

std::vector<uint64_t> host_values(const BlockFunction& f, uint64_t n, const char* who) {
  std::vector<uint64_t> vals;
  vals.reserve(n);
  for (uint64_t x = 0; x < n; ++x) {
    auto v = f.value(x);
    if (!v) throw budget_error(std::string(who) + ": f undefined at " + std::to_string(x));
    vals.push_back(*v);
  }
  return vals;
}

struct UnionFind {
  std::vector<uint64_t> parent;
  explicit UnionFind(uint64_t n) : parent(n) {
    for (uint64_t i = 0; i < n; ++i) parent[i] = i;
  }
  uint64_t find(uint64_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(uint64_t a, uint64_t b) { parent[find(a)] = find(b); }
};

struct EmbedSearch {
  const FiniteStructure& b;
  const std::vector<uint64_t>& vals;
  uint64_t n;
  uint64_t cap;

  bool have_blocks = false;
  std::vector<uint64_t> block_id;    // per host position
  std::vector<uint64_t> block_size;  // per host block id

  UnionFind uf;
  std::vector<uint64_t> comp_size;
  std::vector<std::vector<uint64_t>> bpre;  // b-positions mapping to k
  std::vector<uint64_t> phi;
  std::unordered_map<uint64_t, uint64_t> comp_block;  // component root -> host block id
  uint64_t count = 0;

  EmbedSearch(const FiniteStructure& b_, const std::vector<uint64_t>& vals_, uint64_t cap_)
      : b(b_), vals(vals_), n(vals_.size()), cap(cap_), uf(b_.size()) {
    uint64_t len = b.size();
    bpre.resize(len);
    for (uint64_t k = 0; k < len; ++k) {
      uf.unite(k, b.fvals[k]);
      if (b.fvals[k] != k) bpre[b.fvals[k]].push_back(k);
    }
    comp_size.assign(len, 0);
    for (uint64_t k = 0; k < len; ++k) ++comp_size[uf.find(k)];
    phi.assign(len, 0);
  }

  bool admissible(uint64_t k, uint64_t y) {
    uint64_t j = b.fvals[k];
    if (j < k && vals[y] != phi[j]) return false;
    if (j == k && vals[y] != y) return false;
    for (uint64_t p : bpre[k])
      if (p < k && vals[phi[p]] != y) return false;
    if (have_blocks) {
      uint64_t root = uf.find(k);
      auto it = comp_block.find(root);
      if (it != comp_block.end()) {
        if (block_id[y] != it->second) return false;
      } else if (comp_size[root] > block_size[block_id[y]]) {
        return false;
      }
    }
    return true;
  }

  void dfs(uint64_t k, uint64_t min_y) {
    if (k == b.size()) {
      ++count;
      return;
    }
    for (uint64_t y = min_y; y + (b.size() - k) <= n; ++y) {
      if (!admissible(k, y)) continue;
      phi[k] = y;
      uint64_t root = 0;
      bool claimed = false;
      if (have_blocks) {
        root = uf.find(k);
        if (!comp_block.count(root)) {
          comp_block[root] = block_id[y];
          claimed = true;
        }
      }
      dfs(k + 1, y + 1);
      if (claimed) comp_block.erase(root);
      if (cap && count >= cap) return;
    }
  }
};

}  // namespace

uint64_t count_embeddings(const FiniteStructure& b, const BlockFunction& f, uint64_t n,
                          uint64_t cap) {
  if (b.size() == 0) return 1;
  if (b.size() > n) return 0;
  std::vector<uint64_t> vals = host_values(f, n, "count_embeddings");
  EmbedSearch search(b, vals, cap);
  DecomposeResult d = decompose_prefix(f, n);
  if (d.ok()) {
    search.have_blocks = true;
    search.block_id.resize(n);
    for (uint64_t i = 0; i < d.blocks.size(); ++i) {
      const Interval& iv = d.blocks[i].interval;
      for (uint64_t p = iv.lo; p <= iv.hi; ++p) search.block_id[p] = i;
      search.block_size.push_back(iv.size());
    }
  }
  search.dfs(0, 0);
  return search.count;
}

SegmentSequence unique_segments(const BlockFunction& f, uint64_t n) {
  SegmentSequence out;
  DecomposeResult d = decompose_prefix(f, n);
  if (!d.ok()) return out;
  std::vector<uint64_t> vals = host_values(f, n, "unique_segments");
  for (const Block& blk : d.blocks) {
    uint64_t k = blk.interval.hi + 1;
    FiniteStructure seg(std::vector<uint64_t>(vals.begin(), vals.begin() + long(k)));
    if (count_embeddings(seg, f, n, 2) == 1) {
      out.lengths.push_back(k);
      out.segments.push_back(std::move(seg));
    }
  }
  return out;
}

// --- recover_successor ------------------------------------------------------

RecoverResult recover_successor(const CopyOracle& o, const SegmentSequence& segs, uint64_t x,
                                uint64_t query_budget) {
  RecoverResult res;
  LessFimgView view(o, query_budget);
  std::vector<uint64_t> order;  // revealed names, sorted by <_A
  std::unordered_map<uint64_t, uint64_t> fmemo;
  uint64_t confirmed = 0;  // longest certified initial-segment length
  size_t next_seg = 0;

  auto fimg_memo = [&](uint64_t name) {
    auto it = fmemo.find(name);
    if (it != fmemo.end()) return it->second;
    uint64_t v = view.fimg(name);
    fmemo.emplace(name, v);
    return v;
  };

  try {
    for (uint64_t t = 0;; ++t) {
      if (next_seg >= segs.lengths.size()) break;  // no certificate can ever cover x
      // binary insert of name t
      size_t lo = 0, hi = order.size();
      while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (view.less(t, order[mid]))
          hi = mid;
        else
          lo = mid + 1;
      }
      order.insert(order.begin() + long(lo), t);
      {
        std::ostringstream os;
        os << "probe " << t << " rank " << lo;
        res.trace.push_back(os.str());
      }

      while (next_seg < segs.lengths.size() && segs.lengths[next_seg] <= order.size()) {
        uint64_t L = segs.lengths[next_seg];
        const FiniteStructure& seg = segs.segments[next_seg];
        bool match = true;
        for (uint64_t k = 0; k < L && match; ++k)
          match = fimg_memo(order[k]) == order[seg.fvals[k]];
        if (!match) break;  // retry after more reveals
        confirmed = L;
        ++next_seg;
        res.trace.push_back("segment " + std::to_string(L) + " confirmed");
        for (uint64_t i = 0; i < confirmed; ++i) {
          if (order[i] == x && i + 1 < confirmed) {
            res.kind = RecoverResult::Kind::Ok;
            res.successor = order[i + 1];
            res.queries_used = view.queries();
            res.trace.push_back("answer " + std::to_string(res.successor) + " after " +
                                std::to_string(x));
            return res;
          }
        }
      }
    }
  } catch (const budget_error&) {
    // fall through to Exhausted
  }
  res.kind = RecoverResult::Kind::Exhausted;
  res.queries_used = view.queries();
  return res;
}

ReduceResult reduce_f_to_succ(const CopyOracle& o, uint64_t least_name, uint64_t x,
                              const BlockFunction& f, uint64_t query_budget) {
  SuccView view(o, query_budget);
  std::vector<uint64_t> chain{least_name};
  while (chain.back() != x) chain.push_back(view.succ(chain.back()));
  uint64_t p = chain.size() - 1;
  auto v = f.value(p);
  if (!v) throw budget_error("reduce_f_to_succ: f undefined at " + std::to_string(p));
  while (chain.size() <= *v) chain.push_back(view.succ(chain.back()));
  return ReduceResult{chain[*v], view.queries()};
}

// --- semi-embeddings ---------------------------------------------------------

namespace {

struct HostIndex {
  std::vector<uint64_t> block_start;  // per position
  std::vector<uint64_t> block_len;    // per position (of the covering block)
  std::vector<Block> blocks;
};

HostIndex index_host(const BlockFunction& f, uint64_t range_len) {
  DecomposeResult d = decompose_prefix(f, range_len);
  if (!d.ok())
    throw structure_error("semi-embedding host range does not decompose into blocks");
  HostIndex h;
  h.block_start.resize(range_len);
  h.block_len.resize(range_len);
  for (const Block& b : d.blocks)
    for (uint64_t p = b.interval.lo; p <= b.interval.hi; ++p) {
      h.block_start[p] = b.interval.lo;
      h.block_len[p] = b.interval.size();
    }
  h.blocks = std::move(d.blocks);
  return h;
}

// Chunks sorted by session position with positions validated consecutive.
struct ChunkView {
  const MarkedChunk* chunk;
  uint64_t first_pos;  // session position of first element
  uint64_t len;
};

std::vector<ChunkView> chunk_views(const CopySession& session, const MarkedPrefix& marks) {
  std::vector<ChunkView> views;
  uint64_t covered = 0;
  for (const MarkedChunk& c : marks.chunks) {
    if (c.names.empty()) throw std::invalid_argument("empty chunk");
    if (c.marked && c.shape.size() != c.names.size())
      throw std::invalid_argument("marked chunk size disagrees with its shape");
    auto p0 = session.position_of(c.names[0]);
    if (!p0) throw std::invalid_argument("chunk name not in session");
    for (uint64_t i = 0; i < c.names.size(); ++i) {
      auto pi = session.position_of(c.names[i]);
      if (!pi || *pi != *p0 + i)
        throw std::invalid_argument("chunk names not consecutive in session order");
    }
    views.push_back({&c, *p0, c.names.size()});
    covered += c.names.size();
  }
  if (covered != session.size())
    throw std::invalid_argument("chunks do not cover the session exactly");
  std::sort(views.begin(), views.end(),
            [](const ChunkView& a, const ChunkView& b) { return a.first_pos < b.first_pos; });
  uint64_t expect = 0;
  for (const ChunkView& v : views) {
    if (v.first_pos != expect) throw std::invalid_argument("chunks overlap or leave gaps");
    expect += v.len;
  }
  return views;
}

struct XiSearch {
  const std::vector<ChunkView>& views;
  const HostIndex& host;
  uint64_t range_len;
  uint64_t fixed_floor;

  std::vector<uint64_t> suffix_len;  // elements in views[i..]
  std::set<std::pair<uint64_t, uint64_t>> failed;  // (view index, cur)
  std::vector<uint64_t> image;

  XiSearch(const std::vector<ChunkView>& v, const HostIndex& h, uint64_t r, uint64_t ff)
      : views(v), host(h), range_len(r), fixed_floor(ff) {
    suffix_len.assign(views.size() + 1, 0);
    for (size_t i = views.size(); i > 0; --i)
      suffix_len[i - 1] = suffix_len[i] + views[i - 1].len;
  }

  bool place(size_t idx, uint64_t cur) {
    if (idx == views.size()) return true;
    if (suffix_len[idx] > range_len - std::min(cur, range_len)) return false;
    if (failed.count({idx, cur})) return false;
    const ChunkView& v = views[idx];
    bool ok = false;
    if (v.chunk->marked) {
      if (v.first_pos < fixed_floor) {
        ok = v.first_pos >= cur && try_block(idx, v.first_pos);
      } else {
        for (uint64_t start = cur; start + suffix_len[idx] <= range_len && !ok; ++start)
          ok = try_block(idx, start);
      }
    } else {
      if (v.first_pos < fixed_floor) {
        ok = v.first_pos >= cur && try_free(idx, v.first_pos);
      } else {
        for (uint64_t p = cur; p + suffix_len[idx] <= range_len && !ok; ++p)
          ok = try_free(idx, p);
      }
    }
    if (!ok) failed.insert({idx, cur});
    return ok;
  }

  bool try_block(size_t idx, uint64_t start) {
    const ChunkView& v = views[idx];
    if (start + v.len > range_len) return false;
    if (host.block_start[start] != start || host.block_len[start] != v.len) return false;
    const Block& hb = *std::find_if(host.blocks.begin(), host.blocks.end(),
                                    [&](const Block& b) { return b.interval.lo == start; });
    if (!structures_isomorphic(hb.shape, v.chunk->shape)) return false;
    if (!place(idx + 1, start + v.len)) return false;
    for (uint64_t i = 0; i < v.len; ++i) image[v.first_pos + i] = start + i;
    return true;
  }

  bool try_free(size_t idx, uint64_t p) {
    const ChunkView& v = views[idx];
    if (p >= range_len) return false;
    if (!place(idx + 1, p + 1)) return false;
    image[v.first_pos] = p;
    return true;
  }
};

}  // namespace

std::optional<SemiEmbedding> find_semi_embedding(const CopySession& session,
                                                 const MarkedPrefix& marks,
                                                 const BlockFunction& f, uint64_t range_len,
                                                 uint64_t fixed_floor) {
  if (session.size() > range_len) return std::nullopt;
  std::vector<ChunkView> views = chunk_views(session, marks);
  HostIndex host = index_host(f, range_len);
  XiSearch search(views, host, range_len, fixed_floor);
  search.image.assign(session.size(), 0);
  if (!search.place(0, 0)) return std::nullopt;
  return SemiEmbedding{std::move(search.image)};
}

bool verify_semi_embedding(const CopySession& session, const MarkedPrefix& marks,
                           const BlockFunction& f, const SemiEmbedding& xi, uint64_t range_len,
                           uint64_t fixed_floor) {
  try {
    if (xi.image.size() != session.size()) return false;
    for (uint64_t i = 0; i < xi.image.size(); ++i) {
      if (xi.image[i] >= range_len) return false;
      if (i && xi.image[i - 1] >= xi.image[i]) return false;
      if (i < fixed_floor && xi.image[i] != i) return false;
    }
    std::vector<ChunkView> views = chunk_views(session, marks);
    HostIndex host = index_host(f, range_len);
    for (const ChunkView& v : views) {
      if (!v.chunk->marked) continue;
      uint64_t start = xi.image[v.first_pos];
      for (uint64_t i = 0; i < v.len; ++i)
        if (xi.image[v.first_pos + i] != start + i) return false;
      if (host.block_start[start] != start || host.block_len[start] != v.len) return false;
      auto it = std::find_if(host.blocks.begin(), host.blocks.end(),
                             [&](const Block& b) { return b.interval.lo == start; });
      if (it == host.blocks.end() || !structures_isomorphic(it->shape, v.chunk->shape))
        return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace spectra
