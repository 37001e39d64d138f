#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace metagfn {

using Mat = Eigen::MatrixXd;

// Reverse-mode tape over dense matrices. Nodes are created in topological
// order by the op builders below; backward() replays the tape in reverse,
// accumulating Jacobian-transpose products into every node that (directly
// or transitively) depends on a param. Graphs are built per batch and
// discarded; params are re-bound each time.
class Graph {
 public:
  int input(Mat v);         // constant leaf
  int param(const Mat& v);  // differentiable leaf

  const Mat& value(int id) const { return nodes_[id].value; }
  const Mat& grad(int id) const;
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // seed d(root)=1 (root must be 1x1) and sweep the tape backwards
  void backward(int root);

  // the callback receives this graph and the id of the node it belongs to
  using BackFn = std::function<void(Graph&, int)>;
  int emit(Mat value, const std::vector<int>& parents, BackFn back);
  Mat& grad_ref(int id) { return nodes_[id].grad; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    BackFn back;
  };
  std::vector<Node> nodes_;
};

// ---- ops ----------------------------------------------------------------

int matmul(Graph& g, int a, int b);
int add(Graph& g, int a, int b);  // same shape
int sub(Graph& g, int a, int b);
int mul(Graph& g, int a, int b);  // elementwise

int div(Graph& g, int a, int b);  // elementwise
int square(Graph& g, int x);
int exp_(Graph& g, int x);
int log_(Graph& g, int x);
int sigmoid(Graph& g, int x);
int gelu(Graph& g, int x);  // exact erf form
int atan_(Graph& g, int x);
int sin_(Graph& g, int x);
int cos_(Graph& g, int x);
int log_bessel_i0_(Graph& g, int x);

int scale(Graph& g, int x, double c);
int add_const(Graph& g, int x, double c);
int mul_mat(Graph& g, int x, const Mat& m);  // elementwise constant mask
int sub_from(Graph& g, const Mat& c, int x);  // c - x

int add_row_bias(Graph& g, int x, int bias);  // bias: 1 x cols

int rows(Graph& g, int x, int r0, int n);
int cols(Graph& g, int x, int c0, int n);

int broadcast11(Graph& g, int x, int r);  // 1x1 -> r x 1
int row_sum(Graph& g, int x);             // r x c -> r x 1
int sum_all(Graph& g, int x);             // -> 1 x 1

// elementwise log(sum_k exp(xs[k])) over same-shape nodes, max-stabilized
int logsumexp(Graph& g, const std::vector<int>& xs);

}  // namespace metagfn
