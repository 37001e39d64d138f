#pragma once

#include <deque>
#include <vector>

#include <Eigen/Dense>

#include "metagfn/gfn.hpp"
#include "metagfn/rng.hpp"

namespace metagfn {

// One admitted exploration sample: a terminal state with its reward, and
// optionally the full trajectory it arrived with (states.empty() when only
// the terminal was kept and replay regenerates trajectories on demand).
struct ReplayEntry {
  Eigen::VectorXd terminal;
  double reward = 0.0;
  Trajectory trajectory;

  bool has_trajectory() const { return !trajectory.states.empty(); }
};

// Capacity-bounded FIFO store of high-reward terminals with stratified
// retrieval: draws mix the top of the reward ranking with the long tail so
// replay batches keep revisiting the best finds without starving the rest.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(double admit_threshold, int capacity = 10000);

  // Silently drops entries whose reward does not exceed the admission
  // threshold; otherwise appends, evicting the oldest entry when full.
  void push(ReplayEntry entry);

  // Indices of b draws: ceil(b/2) uniform from the top-30%-by-reward stratum
  // followed by floor(b/2) uniform from the bottom 70%, with replacement.
  // Ranking ties break by insertion order (older entries rank higher). A
  // buffer too small to split two ways degenerates to uniform draws over
  // everything. Throws when empty.
  std::vector<int> sample_biased(int b, Rng& rng) const;

  const ReplayEntry& entry(int i) const { return entries_[i]; }
  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  int capacity() const { return capacity_; }
  double admit_threshold() const { return admit_threshold_; }

 private:
  double admit_threshold_;
  int capacity_;
  std::deque<ReplayEntry> entries_;
};

}  // namespace metagfn
