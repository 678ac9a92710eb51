#include "sidx/index_io.hpp"

#include <algorithm>
#include <string>

#include "sidx/binary.hpp"

namespace sidx {

namespace {

using binary::ByteReader;
using binary::ByteWriter;

void put_ids(ByteWriter& w, const std::vector<ItemId>& ids) {
  w.put<std::uint64_t>(ids.size());
  w.put_all(std::span<const ItemId>(ids));
}

std::vector<ItemId> get_ids(ByteReader& r) {
  const auto len = r.get<std::uint64_t>("list length");
  r.require(len * sizeof(ItemId), "posting list");
  std::vector<ItemId> ids(len);
  const std::uint64_t at = r.offset();
  r.get_all(std::span<ItemId>(ids), "posting list");
  if (!std::is_sorted(ids.begin(), ids.end()) ||
      std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw FormatError("posting list is not strictly ascending", at);
  }
  return ids;
}

std::vector<float> get_floats(ByteReader& r, std::uint64_t count, const char* what) {
  r.require(count * sizeof(float), what);
  std::vector<float> v(count);
  r.get_all(std::span<float>(v), what);
  return v;
}

}  // namespace

std::vector<unsigned char> serialize_index(const SemanticIndex& index, const ResidualPQStore* pq) {
  ByteWriter w;
  w.put_header(binary::Kind::index);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.params().alpha));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.params().n_labels));

  const auto& mapping = index.mapping();
  w.put<std::uint8_t>(mapping ? 1 : 0);
  if (mapping) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(mapping->n_cells));
    w.put_all(std::span<const std::uint32_t>(mapping->cell_of));
  }
  for (const auto& list : index.lists()) put_ids(w, list);

  const auto& split = index.split();
  w.put<std::uint8_t>(split ? 1 : 0);
  if (split) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(split->L));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(split->d));
    for (const auto& sc : split->partitions) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(sc.size()));
      w.put_all(sc.centroids.data());
      for (const auto& ids : sc.ids) put_ids(w, ids);
    }
  }

  w.put<std::uint8_t>(pq ? 1 : 0);
  if (pq) {
    if (pq->n_lists() != index.n_lists()) {
      throw ConfigError("PQ block does not match the index posting lists");
    }
    const auto& cb = pq->codebook;
    w.put<std::uint8_t>(static_cast<std::uint8_t>(binary::Kind::pq));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cb.M()));
    w.put<std::uint32_t>(cb.k_bits());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cb.d()));
    w.put_all(cb.codewords());
    w.put_all(pq->centroids.data());
    for (std::size_t l = 0; l < pq->n_lists(); ++l) {
      if (pq->ids[l] != index.list(l)) {
        throw ConfigError("PQ entries of list " + std::to_string(l) +
                          " differ from the posting list");
      }
      for (std::size_t p = 0; p < pq->ids[l].size(); ++p) {
        w.put<std::uint64_t>(pq->ids[l][p]);
        w.put_all(pq->code(l, p));
      }
    }
  }
  return w.bytes();
}

IndexBundle deserialize_index(std::vector<unsigned char> bytes) {
  ByteReader r(std::move(bytes));
  r.expect_header(binary::Kind::index);
  IndexParams params;
  params.alpha = r.get<std::uint32_t>("alpha");
  params.n_labels = r.get<std::uint32_t>("n_labels");

  std::optional<LabelMapping> mapping;
  if (r.get<std::uint8_t>("mapping flag") != 0) {
    LabelMapping m;
    m.n_cells = r.get<std::uint32_t>("n_cells");
    r.require(params.n_labels * sizeof(std::uint32_t), "mapping");
    m.cell_of.resize(params.n_labels);
    const std::uint64_t at = r.offset();
    r.get_all(std::span<std::uint32_t>(m.cell_of), "mapping");
    try {
      m.validate();
    } catch (const ConfigError& e) {
      throw FormatError(e.what(), at);
    }
    mapping = std::move(m);
  }
  const std::size_t n_lists = mapping ? mapping->n_cells : params.n_labels;
  std::vector<std::vector<ItemId>> lists(n_lists);
  std::size_t n_items = 0;
  for (auto& l : lists) {
    l = get_ids(r);
    if (!l.empty()) n_items = std::max<std::size_t>(n_items, l.back() + 1);
  }

  std::optional<SplitStructure> split;
  if (r.get<std::uint8_t>("split flag") != 0) {
    SplitStructure s;
    s.L = r.get<std::uint32_t>("L");
    s.d = r.get<std::uint32_t>("split dimension");
    s.partitions.resize(n_lists);
    for (auto& sc : s.partitions) {
      const auto n_sub = r.get<std::uint32_t>("sub-cell count");
      sc.centroids = Centroids(n_sub, s.d, get_floats(r, std::uint64_t{n_sub} * s.d, "sub-centroids"));
      sc.ids.resize(n_sub);
      for (auto& ids : sc.ids) ids = get_ids(r);
    }
    split = std::move(s);
  }

  IndexBundle out;
  if (r.get<std::uint8_t>("pq flag") != 0) {
    const std::uint64_t kind_at = r.offset();
    if (r.get<std::uint8_t>("pq kind") != static_cast<std::uint8_t>(binary::Kind::pq)) {
      throw FormatError("bad PQ block kind", kind_at);
    }
    const auto M = r.get<std::uint32_t>("M");
    const auto K = r.get<std::uint32_t>("K");
    const std::uint64_t d_at = r.offset();
    const auto d = r.get<std::uint32_t>("d");
    if (M == 0 || d == 0 || d % M != 0 || K == 0 || K > kMaxPQBits) {
      throw FormatError("invalid PQ parameters", d_at);
    }
    const std::uint64_t ksub = std::uint64_t{1} << K;
    PQCodebook cb(d, M, K, get_floats(r, M * ksub * (d / M), "codebook"));
    Centroids centroids(n_lists, d, get_floats(r, std::uint64_t{n_lists} * d, "centroids"));
    std::vector<std::vector<ItemId>> ids(n_lists);
    std::vector<std::vector<std::uint8_t>> codes(n_lists);
    for (std::size_t l = 0; l < n_lists; ++l) {
      ids[l].resize(lists[l].size());
      codes[l].resize(lists[l].size() * M);
      for (std::size_t p = 0; p < lists[l].size(); ++p) {
        const std::uint64_t at = r.offset();
        ids[l][p] = r.get<std::uint64_t>("PQ entry id");
        if (ids[l][p] != lists[l][p]) throw FormatError("PQ entry id differs from posting list", at);
        r.get_all(std::span<std::uint8_t>(codes[l].data() + p * M, M), "PQ code");
      }
    }
    out.pq = assemble_residual_store(std::move(cb), std::move(centroids), std::move(ids),
                                     std::move(codes));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after index", r.offset());
  out.index = SemanticIndex(params, n_items, std::move(lists), std::move(mapping), std::move(split));
  return out;
}

void save_index(const std::filesystem::path& path, const SemanticIndex& index,
                const ResidualPQStore* pq) {
  const auto bytes = serialize_index(index, pq);
  binary::write_file_atomic(path, bytes);
}

IndexBundle load_index(const std::filesystem::path& path) {
  return deserialize_index(binary::read_file(path));
}

}  // namespace sidx
