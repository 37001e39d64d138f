#include "metagfn/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace metagfn {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double bessel_i1_over_i0(double kappa) {
  return std::cyl_bessel_i(1, kappa) / std::cyl_bessel_i(0, kappa);
}

}  // namespace

int Graph::input(Mat v) {
  Node n;
  n.value = std::move(v);
  nodes_.push_back(std::move(n));
  return size() - 1;
}

int Graph::param(const Mat& v) {
  Node n;
  n.value = v;
  n.needs_grad = true;
  n.grad = Mat::Zero(v.rows(), v.cols());
  nodes_.push_back(std::move(n));
  return size() - 1;
}

const Mat& Graph::grad(int id) const {
  if (!nodes_[id].needs_grad)
    throw std::logic_error("graph: grad of a non-tracked node");
  return nodes_[id].grad;
}

int Graph::emit(Mat value, const std::vector<int>& parents, BackFn back) {
  Node n;
  n.value = std::move(value);
  for (const int p : parents) n.needs_grad = n.needs_grad || nodes_[p].needs_grad;
  if (n.needs_grad) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    n.back = std::move(back);
  }
  nodes_.push_back(std::move(n));
  return size() - 1;
}

void Graph::backward(int root) {
  if (nodes_[root].value.size() != 1)
    throw std::invalid_argument("graph: backward root must be a scalar");
  if (!nodes_[root].needs_grad)
    throw std::logic_error("graph: backward from a constant");
  nodes_[root].grad(0, 0) = 1.0;
  for (int id = root; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.needs_grad && n.back) n.back(*this, id);
  }
}

namespace {

// accumulate into a parent only if it tracks gradients
inline void accum(Graph& g, int pid, const Mat& delta) {
  if (g.needs_grad(pid)) g.grad_ref(pid) += delta;
}

// unary elementwise op: f(value), then dx += dout .* dfdx(value)
template <typename F, typename DF>
int unary(Graph& g, int x, F f, DF dfdx) {
  Mat v = f(g.value(x).array()).matrix();
  return g.emit(std::move(v), {x}, [x, dfdx](Graph& g, int out) {
    accum(g, x,
          (g.grad_ref(out).array() * dfdx(g.value(x).array())).matrix());
  });
}

}  // namespace

int matmul(Graph& g, int a, int b) {
  return g.emit(g.value(a) * g.value(b), {a, b}, [a, b](Graph& g, int out) {
    const Mat& go = g.grad_ref(out);
    accum(g, a, go * g.value(b).transpose());
    accum(g, b, g.value(a).transpose() * go);
  });
}

int add(Graph& g, int a, int b) {
  return g.emit(g.value(a) + g.value(b), {a, b}, [a, b](Graph& g, int out) {
    accum(g, a, g.grad_ref(out));
    accum(g, b, g.grad_ref(out));
  });
}

int sub(Graph& g, int a, int b) {
  return g.emit(g.value(a) - g.value(b), {a, b}, [a, b](Graph& g, int out) {
    accum(g, a, g.grad_ref(out));
    accum(g, b, -g.grad_ref(out));
  });
}

int mul(Graph& g, int a, int b) {
  return g.emit(g.value(a).cwiseProduct(g.value(b)), {a, b},
                [a, b](Graph& g, int out) {
                  const Mat& go = g.grad_ref(out);
                  accum(g, a, go.cwiseProduct(g.value(b)));
                  accum(g, b, go.cwiseProduct(g.value(a)));
                });
}

int div(Graph& g, int a, int b) {
  return g.emit(g.value(a).cwiseQuotient(g.value(b)), {a, b},
                [a, b](Graph& g, int out) {
                  const Mat& go = g.grad_ref(out);
                  accum(g, a, go.cwiseQuotient(g.value(b)));
                  accum(g, b, -go.cwiseProduct(g.value(out))
                                   .cwiseQuotient(g.value(b)));
                });
}

int square(Graph& g, int x) {
  return unary(
      g, x, [](const auto& v) { return v.square(); },
      [](const auto& v) { return 2.0 * v; });
}

int exp_(Graph& g, int x) {
  return unary(
      g, x, [](const auto& v) { return v.exp(); },
      [](const auto& v) { return v.exp(); });
}

int log_(Graph& g, int x) {
  return unary(
      g, x, [](const auto& v) { return v.log(); },
      [](const auto& v) { return v.inverse(); });
}

int sigmoid(Graph& g, int x) {
  return unary(
      g, x, [](const auto& v) { return 0.5 * (0.5 * v).tanh() + 0.5; },
      [](const auto& v) {
        const auto s = 0.5 * (0.5 * v).tanh() + 0.5;
        return s * (1.0 - s);
      });
}

int gelu(Graph& g, int x) {
  return unary(
      g, x,
      [](const auto& v) -> Eigen::ArrayXXd {
        return v.unaryExpr([](double t) {
          return 0.5 * t * (1.0 + std::erf(t * kInvSqrt2));
        });
      },
      [](const auto& v) -> Eigen::ArrayXXd {
        // Phi(t) + t * phi(t) with Phi the standard normal CDF
        return v.unaryExpr([](double t) {
          return 0.5 * (1.0 + std::erf(t * kInvSqrt2)) +
                 t * kInvSqrt2Pi * std::exp(-0.5 * t * t);
        });
      });
}

int atan_(Graph& g, int x) {
  return unary(
      g, x, [](const auto& v) { return v.atan(); },
      [](const auto& v) { return (1.0 + v.square()).inverse(); });
}

int sin_(Graph& g, int x) {
  return unary(
      g, x, [](const auto& v) { return v.sin(); },
      [](const auto& v) { return v.cos(); });
}

int cos_(Graph& g, int x) {
  return unary(
      g, x, [](const auto& v) { return v.cos(); },
      [](const auto& v) { return -v.sin(); });
}

int log_bessel_i0_(Graph& g, int x) {
  Mat v = g.value(x);
  for (int i = 0; i < v.size(); ++i)
    v.data()[i] = std::log(std::cyl_bessel_i(0, v.data()[i]));
  return g.emit(std::move(v), {x}, [x](Graph& g, int out) {
    if (!g.needs_grad(x)) return;
    Mat d = g.value(x);
    for (int i = 0; i < d.size(); ++i)
      d.data()[i] = bessel_i1_over_i0(d.data()[i]);
    g.grad_ref(x) += g.grad_ref(out).cwiseProduct(d);
  });
}

int scale(Graph& g, int x, double c) {
  return g.emit(c * g.value(x), {x}, [x, c](Graph& g, int out) {
    accum(g, x, c * g.grad_ref(out));
  });
}

int add_const(Graph& g, int x, double c) {
  return g.emit((g.value(x).array() + c).matrix(), {x},
                [x](Graph& g, int out) { accum(g, x, g.grad_ref(out)); });
}

int mul_mat(Graph& g, int x, const Mat& m) {
  return g.emit(g.value(x).cwiseProduct(m), {x}, [x, m](Graph& g, int out) {
    accum(g, x, g.grad_ref(out).cwiseProduct(m));
  });
}

int sub_from(Graph& g, const Mat& c, int x) {
  return g.emit(c - g.value(x), {x}, [x](Graph& g, int out) {
    accum(g, x, -g.grad_ref(out));
  });
}

int add_row_bias(Graph& g, int x, int bias) {
  if (g.value(bias).rows() != 1 || g.value(bias).cols() != g.value(x).cols())
    throw std::invalid_argument("add_row_bias: bias must be 1 x cols(x)");
  Mat v = g.value(x).rowwise() + g.value(bias).row(0);
  return g.emit(std::move(v), {x, bias}, [x, bias](Graph& g, int out) {
    const Mat& go = g.grad_ref(out);
    accum(g, x, go);
    accum(g, bias, go.colwise().sum());
  });
}

int rows(Graph& g, int x, int r0, int n) {
  return g.emit(g.value(x).middleRows(r0, n), {x},
                [x, r0, n](Graph& g, int out) {
                  if (g.needs_grad(x))
                    g.grad_ref(x).middleRows(r0, n) += g.grad_ref(out);
                });
}

int cols(Graph& g, int x, int c0, int n) {
  return g.emit(g.value(x).middleCols(c0, n), {x},
                [x, c0, n](Graph& g, int out) {
                  if (g.needs_grad(x))
                    g.grad_ref(x).middleCols(c0, n) += g.grad_ref(out);
                });
}

int broadcast11(Graph& g, int x, int r) {
  if (g.value(x).size() != 1)
    throw std::invalid_argument("broadcast11: source must be 1x1");
  return g.emit(Mat::Constant(r, 1, g.value(x)(0, 0)), {x},
                [x](Graph& g, int out) {
                  if (g.needs_grad(x)) g.grad_ref(x)(0, 0) += g.grad_ref(out).sum();
                });
}

int row_sum(Graph& g, int x) {
  return g.emit(g.value(x).rowwise().sum(), {x}, [x](Graph& g, int out) {
    if (g.needs_grad(x))
      g.grad_ref(x).colwise() += g.grad_ref(out).col(0);
  });
}

int sum_all(Graph& g, int x) {
  return g.emit(Mat::Constant(1, 1, g.value(x).sum()), {x},
                [x](Graph& g, int out) {
                  if (g.needs_grad(x))
                    g.grad_ref(x).array() += g.grad_ref(out)(0, 0);
                });
}

int logsumexp(Graph& g, const std::vector<int>& xs) {
  if (xs.empty()) throw std::invalid_argument("logsumexp: empty list");
  Mat m = g.value(xs[0]);
  for (size_t k = 1; k < xs.size(); ++k) m = m.cwiseMax(g.value(xs[k]));
  Mat acc = Mat::Zero(m.rows(), m.cols());
  for (const int x : xs) acc += (g.value(x) - m).array().exp().matrix();
  Mat v = m + acc.array().log().matrix();
  return g.emit(std::move(v), xs, [xs](Graph& g, int out) {
    const Mat& go = g.grad_ref(out);
    const Mat& lse = g.value(out);
    for (const int x : xs) {
      if (!g.needs_grad(x)) continue;
      g.grad_ref(x) +=
          go.cwiseProduct((g.value(x) - lse).array().exp().matrix());
    }
  });
}

}  // namespace metagfn
