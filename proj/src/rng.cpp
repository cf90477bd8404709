#include "tcv/rng.hpp"

namespace tcv {

std::string_view to_string(Purpose purpose) {
  switch (purpose) {
    case Purpose::data: return "data";
    case Purpose::eval: return "eval";
    case Purpose::split: return "split";
    case Purpose::fit: return "fit";
    case Purpose::outer: return "outer";
    case Purpose::probe: return "probe";
    case Purpose::folds: return "folds";
    case Purpose::tree: return "tree";
    case Purpose::final_fit: return "final_fit";
  }
  return "unknown";
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngSpec RngSpec::with_replication(std::uint64_t r) const {
  RngSpec out = *this;
  out.replication = r;
  return out;
}

RngSpec RngSpec::with_split(std::uint64_t k) const {
  RngSpec out = *this;
  out.split = k;
  return out;
}

RngSpec RngSpec::with_purpose(Purpose p, std::uint64_t sub_index) const {
  RngSpec out = *this;
  out.purpose = p;
  out.sub = sub_index;
  return out;
}

RngSpec RngSpec::with_sub(std::uint64_t sub_index) const {
  RngSpec out = *this;
  out.sub = sub_index;
  return out;
}

RngSpec RngSpec::child(Purpose p, std::uint64_t sub_index) const {
  return RngSpec{stream_seed(), 0, 0, p, sub_index};
}

std::uint64_t RngSpec::stream_seed() const noexcept {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ replication);
  h = splitmix64(h ^ (split + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose) * 0x9e3779b97f4a7c15ULL);
  h = splitmix64(h ^ (sub + 0xd6e8feb86659fd93ULL));
  return h;
}

Engine RngSpec::engine() const {
  const std::uint64_t s = stream_seed();
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(sub)};
  return Engine(seq);
}

}  // namespace tcv
