#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "metagfn/graph.hpp"
#include "metagfn/rng.hpp"

namespace metagfn {

// Three GELU hidden layers of equal width with inverted dropout, a torso
// shared by every head: n_pf_heads forward-policy heads, one backward-policy
// head, one scalar flow head.
struct Mlp {
  int in_dim = 0, width = 0, pf_dim = 0, n_pf_heads = 1, pb_dim = 0;
  double dropout = 0.2;

  Mat w1, b1, w2, b2, w3, b3;
  std::vector<Mat> w_pf, b_pf;
  Mat w_pb, b_pb, w_flow, b_flow;

  static Mlp make(int in_dim, int width, int pf_dim, int n_pf_heads,
                  int pb_dim, Rng& rng);

  // every tensor, in a fixed order shared with MlpTape::param_ids()
  std::vector<Mat*> tensors();
  std::vector<const Mat*> tensors() const;
};

// one mask per hidden layer; entries are 0 or 1/keep so train-time
// activations are unbiased
struct DropoutMasks {
  std::vector<Mat> m;
};
DropoutMasks make_dropout_masks(int rows, int width, double p, Rng& rng);

// plain (untaped) forward passes; masks == nullptr means evaluation mode
Mat torso_forward(const Mlp& net, const Mat& x, const DropoutMasks* masks);
Mat pf_forward(const Mlp& net, const Mat& h, int head);
Mat pb_forward(const Mlp& net, const Mat& h);
Mat flow_forward(const Mlp& net, const Mat& h);

// the same passes recorded on a tape; parameters are bound once per graph
struct MlpTape {
  const Mlp* net = nullptr;
  int w1, b1, w2, b2, w3, b3;
  std::vector<int> w_pf, b_pf;
  int w_pb, b_pb, w_flow, b_flow;

  MlpTape(Graph& g, const Mlp& net);
  int torso(Graph& g, const Mat& x, const DropoutMasks* masks) const;
  int pf(Graph& g, int torso_id, int head) const;
  int pb(Graph& g, int torso_id) const;
  int flow(Graph& g, int torso_id) const;

  std::vector<int> param_ids() const;  // same order as Mlp::tensors()
};

// Adam over named parameter groups with one global gradient-norm clip.
struct AdamHyper {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double clip_norm = 10.0;
};

class Adam {
 public:
  struct Ref {
    Mat* tensor;
    double lr0;
  };

  Adam() = default;
  Adam(std::vector<Ref> refs, AdamHyper hyper);

  // grads in ref order; the learning rate for group i is lr0_i * schedule.
  // Returns false and leaves every tensor untouched if any gradient entry
  // is non-finite.
  bool step(const std::vector<Mat>& grads, double schedule);

  long steps_taken() const { return step_; }
  const AdamHyper& hyper() const { return hyper_; }

  void save(std::ostream& os) const;
  void load(std::istream& is);  // refs must already be bound

 private:
  std::vector<Ref> refs_;
  std::vector<Mat> m_, v_;
  long step_ = 0;
  AdamHyper hyper_;
};

// linear decay to zero over the whole run
inline double lr_schedule(double j, double total_batches) {
  return 1.0 - j / total_batches;
}

// exact-round-trip tensor text IO (17 significant digits)
void save_tensor(std::ostream& os, const std::string& name, const Mat& t);
Mat load_tensor(std::istream& is, const std::string& expect_name);

void save_mlp(std::ostream& os, const Mlp& net);
Mlp load_mlp(std::istream& is);

}  // namespace metagfn
