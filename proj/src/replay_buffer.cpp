#include "metagfn/replay_buffer.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace metagfn {

ReplayBuffer::ReplayBuffer(double admit_threshold, int capacity)
    : admit_threshold_(admit_threshold), capacity_(capacity) {
  if (capacity <= 0)
    throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(ReplayEntry entry) {
  if (!(entry.reward > admit_threshold_)) return;
  if (static_cast<int>(entries_.size()) == capacity_) entries_.pop_front();
  entries_.push_back(std::move(entry));
}

std::vector<int> ReplayBuffer::sample_biased(int b, Rng& rng) const {
  if (entries_.empty())
    throw std::logic_error("sample_biased: buffer is empty");
  if (b <= 0)
    throw std::invalid_argument("sample_biased: batch size must be positive");

  const int n = size();
  const int n_top = static_cast<int>(std::ceil(0.3 * n));
  const int n_bottom = n - n_top;

  std::vector<int> picks;
  picks.reserve(b);
  if (n_bottom == 0) {
    for (int i = 0; i < b; ++i) picks.push_back(rng.uniform_int(n));
    return picks;
  }

  // reward ranking, descending; stable so equal rewards keep insertion order
  std::vector<int> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [this](int a, int c) {
    return entries_[a].reward > entries_[c].reward;
  });

  const int b_top = (b + 1) / 2;
  for (int i = 0; i < b_top; ++i)
    picks.push_back(rank[rng.uniform_int(n_top)]);
  for (int i = b_top; i < b; ++i)
    picks.push_back(rank[n_top + rng.uniform_int(n_bottom)]);
  return picks;
}

}  // namespace metagfn
