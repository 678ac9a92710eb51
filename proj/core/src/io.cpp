#include "sidx/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "sidx/binary.hpp"

namespace sidx {

namespace binary {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<unsigned char> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error("failed reading '" + path.string() + "'");
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("failed writing '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace binary

FeatureSet read_features(const std::filesystem::path& path) {
  binary::ByteReader r(binary::read_file(path));
  r.expect_header(binary::Kind::features);
  const auto n = r.get<std::uint64_t>("n");
  const std::uint64_t d_at = r.offset();
  const auto d = r.get<std::uint32_t>("d");
  if (d == 0) throw FormatError("dimension must be >= 1", d_at);

  const std::uint64_t data_start = r.offset();
  const std::uint64_t row_bytes = std::uint64_t{d} * sizeof(float);
  const std::uint64_t full_rows = r.remaining() / row_bytes;
  if (full_rows < n) {
    throw FormatError("truncated payload: row " + std::to_string(full_rows) + " of " +
                          std::to_string(n) + " is incomplete",
                      data_start + full_rows * row_bytes);
  }
  std::vector<float> data(n * d);
  r.get_all(std::span<float>(data), "feature data");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw FormatError("non-finite feature value", data_start + i * sizeof(float));
    }
  }
  if (!r.at_end()) throw FormatError("trailing bytes after feature data", r.offset());
  return FeatureSet(n, d, std::move(data));
}

void write_features(const std::filesystem::path& path, const FeatureSet& features) {
  binary::ByteWriter w;
  w.put_header(binary::Kind::features);
  w.put<std::uint64_t>(features.n());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(features.d()));
  w.put_all(features.data());
  binary::write_file_atomic(path, w.bytes());
}

LabelMatrix read_labels(const std::filesystem::path& path) {
  binary::ByteReader r(binary::read_file(path));
  r.expect_header(binary::Kind::labels);
  const auto n = r.get<std::uint64_t>("n");
  const auto n_labels = r.get<std::uint32_t>("n_labels");
  // Each row needs at least its 2-byte length.
  r.require(n * 2, "label rows");

  std::vector<std::vector<LabelScore>> rows(n);
  std::vector<std::uint64_t> seen(n_labels, ~std::uint64_t{0});
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto k = r.get<std::uint16_t>("row length");
    rows[i].resize(k);
    for (auto& e : rows[i]) {
      const std::uint64_t at = r.offset();
      e.label = r.get<std::uint32_t>("label");
      e.confidence = r.get<float>("confidence");
      if (e.label >= n_labels) {
        throw FormatError("label " + std::to_string(e.label) + " >= n_labels " +
                              std::to_string(n_labels) + " in row " + std::to_string(i),
                          at);
      }
      if (!(e.confidence >= 0.0f && e.confidence <= 1.0f)) {
        throw FormatError("confidence outside [0,1] in row " + std::to_string(i), at + 4);
      }
      if (seen[e.label] == i) {
        throw FormatError("duplicate label " + std::to_string(e.label) + " in row " +
                              std::to_string(i),
                          at);
      }
      seen[e.label] = i;
    }
  }
  if (!r.at_end()) throw FormatError("trailing bytes after label rows", r.offset());
  return LabelMatrix(n_labels, std::move(rows));
}

void write_labels(const std::filesystem::path& path, const LabelMatrix& labels) {
  binary::ByteWriter w;
  w.put_header(binary::Kind::labels);
  w.put<std::uint64_t>(labels.n());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(labels.n_labels()));
  for (const auto& row : labels.rows()) {
    if (row.size() > 0xffff) throw ConfigError("label row longer than 65535 entries");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(row.size()));
    for (const auto& e : row) {
      w.put<std::uint32_t>(e.label);
      w.put<float>(e.confidence);
    }
  }
  binary::write_file_atomic(path, w.bytes());
}

namespace {

std::uint64_t parse_id(std::string_view tok, std::uint64_t line) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    throw FormatError("invalid id '" + std::string(tok) + "'", line);
  }
  return v;
}

std::vector<ItemId> parse_id_list(std::string_view rest, std::uint64_t line, ItemId query) {
  std::vector<ItemId> ids;
  std::istringstream ss{std::string(rest)};
  std::string tok;
  while (ss >> tok) ids.push_back(parse_id(tok, line));
  std::sort(ids.begin(), ids.end());
  const auto before = ids.size();
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() != before) {
    warn("ground truth line " + std::to_string(line) + ": dropped " +
         std::to_string(before - ids.size()) + " duplicate id(s) for query " +
         std::to_string(query));
  }
  return ids;
}

}  // namespace

GroundTruth parse_ground_truth(std::istream& in) {
  GroundTruth gt;
  std::map<ItemId, std::size_t> slot;
  std::map<ItemId, std::uint64_t> first_line;
  std::vector<bool> has_relevant, has_junk;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw FormatError("missing ':'", line_no);
    std::string head = line.substr(first, colon - first);
    while (!head.empty() && (head.back() == ' ' || head.back() == '\t')) head.pop_back();
    const bool junk = !head.empty() && head.back() == '!';
    if (junk) head.pop_back();
    const ItemId q = parse_id(head, line_no);

    auto [it, inserted] = slot.try_emplace(q, gt.entries.size());
    if (inserted) {
      gt.entries.push_back(GroundTruthEntry{q, {}, {}});
      has_relevant.push_back(false);
      has_junk.push_back(false);
      first_line[q] = line_no;
    }
    const std::size_t s = it->second;
    auto ids = parse_id_list(std::string_view(line).substr(colon + 1), line_no, q);
    if (junk) {
      if (has_junk[s]) throw FormatError("duplicate junk line for query " + head, line_no);
      has_junk[s] = true;
      gt.entries[s].junk = std::move(ids);
    } else {
      if (has_relevant[s]) throw FormatError("duplicate line for query " + head, line_no);
      if (ids.empty()) throw FormatError("empty relevant set for query " + head, line_no);
      has_relevant[s] = true;
      gt.entries[s].relevant = std::move(ids);
    }
  }
  for (std::size_t s = 0; s < gt.entries.size(); ++s) {
    const auto& e = gt.entries[s];
    if (!has_relevant[s]) {
      throw FormatError("query " + std::to_string(e.query_id) + " has junk but no relevant ids",
                        first_line[e.query_id]);
    }
    std::vector<ItemId> both;
    std::set_intersection(e.relevant.begin(), e.relevant.end(), e.junk.begin(), e.junk.end(),
                          std::back_inserter(both));
    if (!both.empty()) {
      throw FormatError("query " + std::to_string(e.query_id) + ": id " +
                            std::to_string(both.front()) + " is both relevant and junk",
                        first_line[e.query_id]);
    }
  }
  return gt;
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return parse_ground_truth(in);
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt) {
  std::ostringstream out;
  auto put_list = [&](const std::vector<ItemId>& ids) {
    for (ItemId id : ids) out << ' ' << id;
    out << '\n';
  };
  for (const auto& e : gt.entries) {
    out << e.query_id << ':';
    put_list(e.relevant);
    if (!e.junk.empty()) {
      out << e.query_id << "!:";
      put_list(e.junk);
    }
  }
  const std::string s = out.str();
  binary::write_file_atomic(
      path, std::span(reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

}  // namespace sidx
