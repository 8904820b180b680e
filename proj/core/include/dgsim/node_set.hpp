#pragma once

#include <bit>
#include <cstdint>
#include <vector>

namespace dgsim {

using NodeId = std::uint32_t;
using Round = std::uint32_t;

// Fixed-universe set of node ids backed by 64-bit words. Iteration is always
// in ascending id order, which every deterministic traversal in the
// simulator relies on.
class NodeSet {
 public:
  NodeSet() = default;

  explicit NodeSet(NodeId universe, bool filled = false)
      : universe_(universe), words_((universe + 63) / 64, 0) {
    if (filled) {
      for (NodeId id = 0; id < universe; ++id) set(id);
    }
  }

  static NodeSet full(NodeId universe) { return NodeSet(universe, true); }

  NodeId universe() const { return universe_; }

  bool test(NodeId id) const {
    return (words_[id >> 6] >> (id & 63)) & 1u;
  }

  void set(NodeId id) { words_[id >> 6] |= std::uint64_t{1} << (id & 63); }

  void reset(NodeId id) { words_[id >> 6] &= ~(std::uint64_t{1} << (id & 63)); }

  NodeId count() const {
    NodeId n = 0;
    for (const auto w : words_) n += static_cast<NodeId>(std::popcount(w));
    return n;
  }

  bool empty() const {
    for (const auto w : words_) {
      if (w != 0) return false;
    }
    return true;
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      std::uint64_t w = words_[wi];
      while (w != 0) {
        const int bit = std::countr_zero(w);
        fn(static_cast<NodeId>(wi * 64 + bit));
        w &= w - 1;
      }
    }
  }

  // k-th smallest member (k counts from 0); caller guarantees k < count().
  NodeId nth(NodeId k) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      std::uint64_t w = words_[wi];
      const NodeId in_word = static_cast<NodeId>(std::popcount(w));
      if (k >= in_word) {
        k -= in_word;
        continue;
      }
      while (true) {
        const int bit = std::countr_zero(w);
        if (k == 0) return static_cast<NodeId>(wi * 64 + bit);
        --k;
        w &= w - 1;
      }
    }
    return universe_;  // unreachable when the precondition holds
  }

  bool is_subset_of(const NodeSet& other) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      if (words_[wi] & ~other.words_[wi]) return false;
    }
    return true;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

  friend bool operator==(const NodeSet&, const NodeSet&) = default;

 private:
  NodeId universe_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace dgsim
