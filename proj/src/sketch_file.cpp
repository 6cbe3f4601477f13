#include "dynawarp/sketch_file.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include "dynawarp/bic.hpp"

namespace dynawarp {

namespace {

constexpr char kMagic[4] = {'D', 'W', 'S', 'K'};
constexpr std::size_t kSectionTableOffset = 40;
constexpr std::size_t kChecksumOffset = 152;

struct UniqueList {
  std::vector<PostingId> postings;
  std::uint64_t refs{0};
};

auto rank_order_less(const UniqueList& a, const UniqueList& b) -> bool {
  if (a.refs != b.refs) {
    return a.refs > b.refs;
  }
  if (a.postings.front() != b.postings.front()) {
    return a.postings.front() < b.postings.front();
  }
  if (a.postings.size() != b.postings.size()) {
    return a.postings.size() < b.postings.size();
  }
  return a.postings < b.postings;
}

void write_header(ByteWriter& out, const SketchHeader& h) {
  out.put_at<std::uint8_t>(0, 'D');
  out.put_at<std::uint8_t>(1, 'W');
  out.put_at<std::uint8_t>(2, 'S');
  out.put_at<std::uint8_t>(3, 'K');
  out.put_at<std::uint16_t>(4, h.version);
  out.put_at<std::uint16_t>(6, h.flags);
  out.put_at<std::uint64_t>(8, h.n_tokens);
  out.put_at<std::uint64_t>(16, h.n_lists);
  out.put_at<std::uint32_t>(24, h.capacity);
  out.put_at<std::uint8_t>(28, h.signature_bits);
  out.put_at<std::uint8_t>(29, h.rank_length_width);
  out.put_at<std::uint16_t>(30, 0);
  out.put_at<std::uint32_t>(32, h.sample_interval);
  out.put_at<std::uint32_t>(36, 0);
  for (std::size_t i = 0; i < kSketchSectionCount; ++i) {
    out.put_at<std::uint64_t>(kSectionTableOffset + i * 16, h.sections[i].offset);
    out.put_at<std::uint64_t>(kSectionTableOffset + i * 16 + 8, h.sections[i].length);
  }
  const std::uint64_t checksum =
      header_checksum(ByteView(out.bytes().data(), kChecksumOffset));
  out.put_at<std::uint64_t>(kChecksumOffset, checksum);
}

}  // namespace

auto header_checksum(ByteView header_bytes) noexcept -> std::uint64_t {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : header_bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

auto build_sketch(const MutableSketch& sketch, const SketchBuildConfig& cfg) -> Bytes {
  if (!cfg.temporary && cfg.signature_bits > 32) {
    throw std::invalid_argument("build_sketch: signature bits must be <= 32");
  }
  if (cfg.sample_interval == 0) {
    throw std::invalid_argument("build_sketch: sample interval must be positive");
  }
  const std::uint32_t capacity = cfg.capacity.value_or(sketch.capacity());
  if (capacity == 0 || capacity > kMaxCapacity) {
    throw std::invalid_argument("build_sketch: capacity must be in [1, 2^16]");
  }

  // 1. One list universe: live lists plus singleton sets for direct entries.
  std::vector<UniqueList> lists;
  std::vector<std::uint32_t> list_of_handle;
  std::vector<std::uint32_t> list_of_singleton(kMaxCapacity, 0xffffffffu);
  sketch.for_each_list([&](ListHandle h, const MutablePostingList& l) {
    if (list_of_handle.size() <= h) {
      list_of_handle.resize(h + 1, 0xffffffffu);
    }
    list_of_handle[h] = static_cast<std::uint32_t>(lists.size());
    lists.push_back(UniqueList{l.to_vector(), l.token_count});
  });
  std::vector<std::pair<TokenFingerprint, std::uint32_t>> tokens;
  tokens.reserve(sketch.token_count());
  sketch.for_each_token([&](TokenFingerprint fp, TokenMapValue v) {
    std::uint32_t list_index;
    if (v.tag() == TokenMapValue::Tag::kDirect) {
      std::uint32_t& slot = list_of_singleton[v.payload()];
      if (slot == 0xffffffffu) {
        slot = static_cast<std::uint32_t>(lists.size());
        lists.push_back(UniqueList{{static_cast<PostingId>(v.payload())}, 0});
      }
      list_index = slot;
      ++lists[slot].refs;
    } else {
      list_index = list_of_handle.at(v.payload());
    }
    tokens.emplace_back(fp, list_index);
  });
  for (const UniqueList& l : lists) {
    if (l.postings.back() >= capacity) {
      throw std::invalid_argument("build_sketch: posting outside the configured capacity");
    }
  }
  if (lists.size() > kMaxLists) {
    throw std::length_error("build_sketch: more than 2^30 posting lists");
  }

  // 2. Rank by popularity with a total tie-break.
  std::vector<std::uint32_t> order(lists.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return rank_order_less(lists[a], lists[b]);
  });
  std::vector<std::uint32_t> rank_of(lists.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) {
    rank_of[order[r]] = r;
  }

  // 3. MPHF over all fingerprints.
  std::vector<TokenFingerprint> keys;
  keys.reserve(tokens.size());
  for (const auto& [fp, _] : tokens) {
    keys.push_back(fp);
  }
  const Mphf mphf = mphf_build(keys, cfg.gamma);

  const std::uint64_t n = tokens.size();
  std::vector<std::uint32_t> rank_by_index(n);
  std::vector<std::uint32_t> fp_by_index(n);
  for (const auto& [fp, list_index] : tokens) {
    const auto idx = mphf.evaluate(fp);
    if (!idx || *idx >= n) {
      throw std::logic_error("build_sketch: mphf failed on a build key");
    }
    rank_by_index[*idx] = rank_of[list_index];
    fp_by_index[*idx] = fp.value;
  }

  // 4. Rank codes and their prefix-sum index.
  BitWriter rank_bits;
  std::vector<std::uint32_t> rank_lengths(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const unsigned width = rank_code_width(rank_by_index[i]);
    rank_bits.write(rank_by_index[i], width);
    rank_lengths[i] = width;
  }
  const PrefixSumData prefix = build_prefix_sum(rank_lengths, cfg.sample_interval);

  // 5. Signatures or full fingerprints.
  SketchHeader header;
  header.flags = cfg.temporary ? kSketchFlagTemporary : 0;
  header.signature_bits = cfg.temporary ? 32 : cfg.signature_bits;
  const unsigned sig_width = header.signature_width();
  BitWriter signatures;
  for (std::uint64_t i = 0; i < n; ++i) {
    signatures.write(fp_by_index[i], sig_width);
  }

  // 6. Directory and BIC-coded lists in rank order.
  ByteWriter directory;
  BitWriter list_bits;
  for (std::uint32_t r = 0; r < order.size(); ++r) {
    const UniqueList& l = lists[order[r]];
    directory.put<std::uint64_t>(list_bits.bit_length());
    directory.put<std::uint32_t>(static_cast<std::uint32_t>(l.postings.size()));
    bic_encode(l.postings, 0, capacity - 1, list_bits);
  }

  header.n_tokens = n;
  header.n_lists = lists.size();
  header.capacity = capacity;
  header.rank_length_width = prefix.width;
  header.sample_interval = cfg.sample_interval;

  ByteWriter out;
  for (std::size_t i = 0; i < kSketchHeaderSize; ++i) {
    out.put<std::uint8_t>(0);
  }
  auto emit = [&](SketchSection s, ByteView bytes) {
    out.pad_to(8);
    header.sections[static_cast<std::size_t>(s)] = SectionRange{out.size(), bytes.size()};
    out.append(bytes);
  };
  emit(SketchSection::kMphf, mphf.bytes());
  emit(SketchSection::kSignatures, signatures.bytes());
  emit(SketchSection::kRankLengths, prefix.lengths);
  emit(SketchSection::kRankSamples, prefix.samples);
  emit(SketchSection::kRankBits, rank_bits.bytes());
  emit(SketchSection::kListDirectory, directory.bytes());
  emit(SketchSection::kListBits, list_bits.bytes());
  out.pad_to(8);
  write_header(out, header);
  return out.take();
}

auto parse_sketch_header(ByteView file) -> SketchHeader {
  using Kind = SketchFormatError::Kind;
  if (file.size() < kSketchHeaderSize) {
    throw SketchFormatError(Kind::kBounds, "sketch file shorter than its header");
  }
  if (std::memcmp(file.data(), kMagic, 4) != 0) {
    throw SketchFormatError(Kind::kBadMagic, "not a sketch file (bad magic)");
  }
  SketchHeader h;
  h.version = load_le<std::uint16_t>(file, 4);
  if (h.version != kSketchVersion) {
    throw SketchFormatError(Kind::kBadVersion,
                            "unsupported sketch version " + std::to_string(h.version));
  }
  h.checksum = load_le<std::uint64_t>(file, kChecksumOffset);
  if (h.checksum != header_checksum(file.first(kChecksumOffset))) {
    throw SketchFormatError(Kind::kBadChecksum, "sketch header checksum mismatch");
  }
  h.flags = load_le<std::uint16_t>(file, 6);
  h.n_tokens = load_le<std::uint64_t>(file, 8);
  h.n_lists = load_le<std::uint64_t>(file, 16);
  h.capacity = load_le<std::uint32_t>(file, 24);
  h.signature_bits = load_le<std::uint8_t>(file, 28);
  h.rank_length_width = load_le<std::uint8_t>(file, 29);
  h.sample_interval = load_le<std::uint32_t>(file, 32);
  for (std::size_t i = 0; i < kSketchSectionCount; ++i) {
    h.sections[i].offset = load_le<std::uint64_t>(file, kSectionTableOffset + i * 16);
    h.sections[i].length = load_le<std::uint64_t>(file, kSectionTableOffset + i * 16 + 8);
  }

  std::uint64_t cursor = kSketchHeaderSize;
  for (const SectionRange& s : h.sections) {
    if (s.offset < cursor || s.offset > file.size() || s.length > file.size() - s.offset) {
      throw SketchFormatError(Kind::kBounds, "sketch section outside the file or overlapping");
    }
    cursor = s.offset + s.length;
  }
  auto need_bits = [&](SketchSection s, std::uint64_t bits) {
    if (h.section(s).length * 8 < bits) {
      throw SketchFormatError(Kind::kBounds, "sketch section too small for its entry count");
    }
  };
  if (h.capacity > kMaxCapacity || h.n_lists > kMaxLists || h.sample_interval == 0 ||
      h.signature_width() > 32 || h.rank_length_width > 64 ||
      (h.n_lists > 0 && h.capacity == 0) || h.n_tokens > file.size() * 8) {
    throw SketchFormatError(Kind::kCorrupt, "sketch header fields out of range");
  }
  need_bits(SketchSection::kSignatures, h.n_tokens * h.signature_width());
  need_bits(SketchSection::kRankLengths, h.n_tokens * h.rank_length_width);
  need_bits(SketchSection::kRankSamples,
            (h.n_tokens + h.sample_interval - 1) / h.sample_interval * 64);
  need_bits(SketchSection::kListDirectory, h.n_lists * kListDirectoryEntrySize * 8);
  return h;
}

SketchReader::SketchReader(ByteView file) : file_(file), header_(parse_sketch_header(file)) {
  mphf_ = MphfView(section_bytes(SketchSection::kMphf));
  rank_lengths_ = PrefixSumView(section_bytes(SketchSection::kRankLengths),
                                section_bytes(SketchSection::kRankSamples), header_.n_tokens,
                                header_.rank_length_width, header_.sample_interval);
}

auto SketchReader::section_bytes(SketchSection s) const noexcept -> ByteView {
  const SectionRange& r = header_.section(s);
  return file_.subspan(r.offset, r.length);
}

auto SketchReader::signature_at(std::uint64_t index) const -> std::uint32_t {
  if (index >= header_.n_tokens) {
    throw std::out_of_range("sketch: minimal hash index out of range");
  }
  const unsigned width = header_.signature_width();
  return static_cast<std::uint32_t>(
      read_bits(section_bytes(SketchSection::kSignatures), index * width, width));
}

auto SketchReader::rank_at(std::uint64_t index) const -> std::uint64_t {
  const PrefixEntry e = rank_lengths_.entry(index);
  return checked_read_bits(section_bytes(SketchSection::kRankBits), e.offset, e.length);
}

auto SketchReader::is_present(TokenFingerprint fp) const -> std::optional<std::uint64_t> {
  const auto index = mphf_.evaluate(fp);
  if (!index || *index >= header_.n_tokens) {
    return std::nullopt;
  }
  const unsigned width = header_.signature_width();
  const std::uint32_t mask = width >= 32 ? 0xffffffffu : (1u << width) - 1;
  if (signature_at(*index) != (fp.value & mask)) {
    return std::nullopt;
  }
  return rank_at(*index);
}

auto SketchReader::list_cardinality(std::uint64_t list_id) const -> std::uint32_t {
  if (list_id >= header_.n_lists) {
    throw std::out_of_range("sketch: list id out of range");
  }
  return load_le<std::uint32_t>(section_bytes(SketchSection::kListDirectory),
                                list_id * kListDirectoryEntrySize + 8);
}

auto SketchReader::decode_list(std::uint64_t list_id) const -> std::vector<PostingId> {
  if (list_id >= header_.n_lists) {
    throw std::out_of_range("sketch: list id out of range");
  }
  const ByteView directory = section_bytes(SketchSection::kListDirectory);
  const auto bit_offset = load_le<std::uint64_t>(directory, list_id * kListDirectoryEntrySize);
  const auto count = load_le<std::uint32_t>(directory, list_id * kListDirectoryEntrySize + 8);
  if (count == 0 || count > header_.capacity) {
    throw std::out_of_range("sketch: list cardinality outside the posting universe");
  }
  return bic_decode(section_bytes(SketchSection::kListBits), bit_offset, count, 0,
                    header_.capacity - 1)
      .postings;
}

void SketchReader::validate() const {
  using Kind = SketchFormatError::Kind;
  try {
    mphf_.validate();
  } catch (const std::out_of_range& e) {
    throw SketchFormatError(Kind::kCorrupt, e.what());
  }
  if (mphf_.size() != header_.n_tokens) {
    throw SketchFormatError(Kind::kCorrupt, "mphf key count differs from token count");
  }
  const ByteView directory = section_bytes(SketchSection::kListDirectory);
  const std::uint64_t list_bits = header_.section(SketchSection::kListBits).length * 8;
  std::uint64_t previous = 0;
  for (std::uint64_t r = 0; r < header_.n_lists; ++r) {
    const auto offset = load_le<std::uint64_t>(directory, r * kListDirectoryEntrySize);
    const auto count = load_le<std::uint32_t>(directory, r * kListDirectoryEntrySize + 8);
    if (offset < previous || offset > list_bits || count == 0 || count > header_.capacity) {
      throw SketchFormatError(Kind::kCorrupt, "list directory entry " + std::to_string(r) + " invalid");
    }
    previous = offset;
  }
  const std::uint64_t rank_bits = header_.section(SketchSection::kRankBits).length * 8;
  for (std::uint64_t i = 0; i < header_.n_tokens; ++i) {
    const PrefixEntry e = rank_lengths_.entry(i);
    if (e.length == 0 || e.offset + e.length > rank_bits) {
      throw SketchFormatError(Kind::kCorrupt, "rank code " + std::to_string(i) + " outside rank bits");
    }
    if (rank_at(i) >= header_.n_lists) {
      throw SketchFormatError(Kind::kCorrupt, "rank " + std::to_string(i) + " beyond list count");
    }
  }
}

auto merge_segments(std::span<const SketchReader* const> readers) -> MutableSketch {
  if (readers.empty()) {
    throw std::invalid_argument("merge_segments: no segments");
  }
  const std::uint32_t capacity = readers.front()->header().capacity;
  for (const SketchReader* r : readers) {
    if (!r->header().temporary()) {
      throw std::invalid_argument("merge_segments: segment lacks full fingerprints");
    }
    if (r->header().capacity != capacity) {
      throw std::invalid_argument("merge_segments: capacity mismatch across segments");
    }
  }
  MutableSketch merged(capacity);

  // Each (segment, rank) list is decoded once. Pairs are replayed in
  // ascending posting order so tokens sharing a list move together, the
  // same access pattern as the original ingest.
  struct Group {
    std::vector<PostingId> postings;
    std::vector<TokenFingerprint> tokens;
    std::size_t cursor{0};
  };
  std::vector<Group> groups;
  for (const SketchReader* r : readers) {
    const std::size_t base = groups.size();
    groups.resize(base + r->header().n_lists);
    for (std::uint64_t i = 0; i < r->header().n_tokens; ++i) {
      groups[base + r->rank_at(i)].tokens.push_back(TokenFingerprint{r->signature_at(i)});
    }
    for (std::uint64_t rank = 0; rank < r->header().n_lists; ++rank) {
      if (!groups[base + rank].tokens.empty()) {
        groups[base + rank].postings = r->decode_list(rank);
      }
    }
  }
  std::vector<std::vector<std::uint32_t>> due(capacity);
  for (std::uint32_t g = 0; g < groups.size(); ++g) {
    if (!groups[g].postings.empty()) {
      due[groups[g].postings.front()].push_back(g);
    }
  }
  for (std::uint32_t p = 0; p < capacity; ++p) {
    for (std::size_t k = 0; k < due[p].size(); ++k) {
      Group& group = groups[due[p][k]];
      for (TokenFingerprint fp : group.tokens) {
        merged.add(fp, static_cast<PostingId>(p));
      }
      if (++group.cursor < group.postings.size()) {
        due[group.postings[group.cursor]].push_back(due[p][k]);
      }
    }
    due[p].clear();
    due[p].shrink_to_fit();
  }
  return merged;
}

}  // namespace dynawarp
