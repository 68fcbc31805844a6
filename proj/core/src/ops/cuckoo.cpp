#include "farview/ops/cuckoo.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <set>

namespace farview::ops {

namespace {

constexpr std::uint64_t kDefaultSeeds[] = {
    0x9E3779B97F4A7C15ull, 0xC2B2AE3D27D4EB4Full, 0x165667B19E3779F9ull, 0xD6E8FEB86659FD93ull,
    0xFF51AFD7ED558CCDull, 0xC4CEB9FE1A85EC53ull, 0x94D049BB133111EBull, 0xBF58476D1CE4E5B9ull,
};

}  // namespace

void CuckooConfig::validate() const {
  if (tables == 0) fail(ErrorCode::kConfig, "cuckoo needs at least one table");
  if (slots_per_table < 2 || !std::has_single_bit(slots_per_table))
    fail(ErrorCode::kConfig, "slots_per_table must be a power of two >= 2");
  if (!seeds.empty()) {
    if (seeds.size() != tables) fail(ErrorCode::kConfig, "need one seed per cuckoo table");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
      fail(ErrorCode::kConfig, "cuckoo seeds must be distinct");
    for (auto s : seeds)
      if ((s & 1) == 0) fail(ErrorCode::kConfig, "cuckoo seeds must be odd");
  } else if (tables > std::size(kDefaultSeeds)) {
    fail(ErrorCode::kConfig, "more tables than built-in seeds; pass seeds explicitly");
  }
}

std::uint64_t fold_key(ByteSpan key) {
  if (key.size() <= 8) {
    std::uint64_t v = 0;
    std::memcpy(&v, key.data(), key.size());
    return v;
  }
  std::uint64_t h = 0x243F6A8885A308D3ull ^ key.size();
  for (std::size_t at = 0; at < key.size(); at += 8) {
    std::uint64_t w = 0;
    std::memcpy(&w, key.data() + at, std::min<std::size_t>(8, key.size() - at));
    h = std::rotl(h ^ w, 29) * 0x9FB21C651E98DF25ull;
  }
  return h ^ (h >> 32);
}

CuckooTableSet::CuckooTableSet(CuckooConfig cfg, std::size_t key_bytes) : cfg_(std::move(cfg)), key_bytes_(key_bytes) {
  cfg_.validate();
  if (key_bytes_ == 0) fail(ErrorCode::kArgument, "cuckoo keys need at least one byte");
  shift_ = 64 - std::countr_zero(cfg_.slots_per_table);
  seeds_ = cfg_.seeds.empty() ? std::vector<std::uint64_t>(kDefaultSeeds, kDefaultSeeds + cfg_.tables) : cfg_.seeds;
  tables_.resize(cfg_.tables);
  for (auto& t : tables_) {
    t.keys.resize(std::size_t{cfg_.slots_per_table} * key_bytes_);
    t.payloads.resize(cfg_.slots_per_table);
    t.used.resize(cfg_.slots_per_table);
  }
}

std::size_t CuckooTableSet::slot_of(std::size_t table, ByteSpan key) const {
  return static_cast<std::size_t>((fold_key(key) * seeds_[table]) >> shift_);
}

bool CuckooTableSet::key_at(std::size_t t, std::size_t s, ByteSpan key) const {
  const auto& tab = tables_[t];
  return tab.used[s] && std::memcmp(tab.keys.data() + s * key_bytes_, key.data(), key_bytes_) == 0;
}

void CuckooTableSet::put(std::size_t t, std::size_t s, const std::byte* key, std::uint32_t payload) {
  auto& tab = tables_[t];
  std::memmove(tab.keys.data() + s * key_bytes_, key, key_bytes_);
  tab.payloads[s] = payload;
  tab.used[s] = 1;
}

std::optional<std::uint32_t> CuckooTableSet::lookup(ByteSpan key) const {
  if (key.size() != key_bytes_) fail(ErrorCode::kArgument, "key width mismatch");
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const std::size_t s = slot_of(t, key);
    if (key_at(t, s, key)) return tables_[t].payloads[s];
  }
  return std::nullopt;
}

std::size_t CuckooTableSet::residency(ByteSpan key) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < tables_.size(); ++t)
    for (std::size_t s = 0; s < cfg_.slots_per_table; ++s)
      if (key_at(t, s, key)) ++n;
  return n;
}

CuckooTableSet::InsertResult CuckooTableSet::insert(ByteSpan key, std::uint32_t payload) {
  if (auto p = lookup(key)) return {Outcome::kPresent, *p};
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const std::size_t s = slot_of(t, key);
    if (!tables_[t].used[s]) {
      put(t, s, key.data(), payload);
      ++size_;
      return {Outcome::kInserted, payload};
    }
  }

  struct Undo {
    std::size_t table, slot;
    Bytes key;
    std::uint32_t payload;
  };
  std::vector<Undo> log;
  Bytes cur(key.begin(), key.end());
  std::uint32_t cur_payload = payload;
  std::size_t t = 0;
  for (std::uint32_t e = 0; e < cfg_.max_evictions; ++e) {
    const std::size_t s = slot_of(t, cur);
    auto& tab = tables_[t];
    Bytes victim(tab.keys.begin() + s * key_bytes_, tab.keys.begin() + (s + 1) * key_bytes_);
    const std::uint32_t victim_payload = tab.payloads[s];
    log.push_back(Undo{t, s, victim, victim_payload});
    put(t, s, cur.data(), cur_payload);
    ++displacements_;
    cur = std::move(victim);
    cur_payload = victim_payload;
    // The victim tries every other table before displacing again.
    for (std::size_t k = 1; k < tables_.size(); ++k) {
      const std::size_t nt = (t + k) % tables_.size();
      const std::size_t ns = slot_of(nt, cur);
      if (!tables_[nt].used[ns]) {
        put(nt, ns, cur.data(), cur_payload);
        ++size_;
        return {Outcome::kInserted, payload};
      }
    }
    t = (t + 1) % tables_.size();
  }
  for (auto it = log.rbegin(); it != log.rend(); ++it) put(it->table, it->slot, it->key.data(), it->payload);
  return {Outcome::kOverflow, payload};
}

}  // namespace farview::ops
