#pragma once

#include <bit>
#include <cstdint>
#include <functional>

namespace bimatch {

// Models are capped at 64 classes total (customers + servers) so any subset
// of classes packs into a single 64-bit key.
inline constexpr std::uint32_t kMaxClasses = 64;

enum class Side : std::uint8_t { Customer, Server };

// One class within a model: a 0-based index on its own side.
struct ClassId {
  Side side;
  std::uint32_t index;

  friend bool operator==(const ClassId&, const ClassId&) = default;
};

constexpr ClassId customer(std::uint32_t index) { return {Side::Customer, index}; }
constexpr ClassId server(std::uint32_t index) { return {Side::Server, index}; }

// Calls f(bit_index) for every set bit, ascending.
template <typename F>
constexpr void for_each_bit(std::uint64_t mask, F&& f) {
  while (mask != 0) {
    f(static_cast<std::uint32_t>(std::countr_zero(mask)));
    mask &= mask - 1;
  }
}

// A subset of the model's classes, one bitmask per side.  Value type; all
// set algebra is O(1) word arithmetic.
struct ClassSet {
  std::uint64_t customers = 0;
  std::uint64_t servers = 0;

  constexpr bool empty() const { return customers == 0 && servers == 0; }
  constexpr std::uint32_t size() const {
    return static_cast<std::uint32_t>(std::popcount(customers) + std::popcount(servers));
  }
  constexpr std::uint32_t customer_count() const {
    return static_cast<std::uint32_t>(std::popcount(customers));
  }
  constexpr std::uint32_t server_count() const {
    return static_cast<std::uint32_t>(std::popcount(servers));
  }

  constexpr bool contains_customer(std::uint32_t i) const {
    return (customers >> i) & 1u;
  }
  constexpr bool contains_server(std::uint32_t k) const {
    return (servers >> k) & 1u;
  }
  constexpr bool contains(ClassId c) const {
    return c.side == Side::Customer ? contains_customer(c.index) : contains_server(c.index);
  }

  constexpr ClassSet with(ClassId c) const {
    ClassSet r = *this;
    if (c.side == Side::Customer) {
      r.customers |= std::uint64_t{1} << c.index;
    } else {
      r.servers |= std::uint64_t{1} << c.index;
    }
    return r;
  }
  constexpr ClassSet without(ClassId c) const {
    ClassSet r = *this;
    if (c.side == Side::Customer) {
      r.customers &= ~(std::uint64_t{1} << c.index);
    } else {
      r.servers &= ~(std::uint64_t{1} << c.index);
    }
    return r;
  }
  constexpr ClassSet without_customer(std::uint32_t i) const {
    return {customers & ~(std::uint64_t{1} << i), servers};
  }
  constexpr ClassSet without_server(std::uint32_t k) const {
    return {customers, servers & ~(std::uint64_t{1} << k)};
  }

  // Swaps the roles of the two sides (customer i becomes server i and vice
  // versa); the mirror image of this set in the mirrored model.
  constexpr ClassSet mirrored() const { return {servers, customers}; }

  friend constexpr ClassSet operator|(const ClassSet& a, const ClassSet& b) {
    return {a.customers | b.customers, a.servers | b.servers};
  }
  friend constexpr ClassSet operator&(const ClassSet& a, const ClassSet& b) {
    return {a.customers & b.customers, a.servers & b.servers};
  }
  // Set difference.
  friend constexpr ClassSet operator-(const ClassSet& a, const ClassSet& b) {
    return {a.customers & ~b.customers, a.servers & ~b.servers};
  }
  friend constexpr bool operator==(const ClassSet&, const ClassSet&) = default;
};

struct ClassSetHash {
  std::size_t operator()(const ClassSet& s) const {
    // Sets handled together always belong to one model, where customer and
    // server indices never overlap bit ranges after packing; but ClassSet by
    // itself does not know the packing width, so mix both words.
    std::uint64_t h = s.customers * 0x9E3779B97F4A7C15ull;
    h ^= s.servers + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace bimatch
