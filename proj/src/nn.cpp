#include "metagfn/nn.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace metagfn {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;

Mat glorot(int in, int out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (in + out));
  Mat w(in, out);
  for (int i = 0; i < w.size(); ++i)
    w.data()[i] = rng.uniform(-bound, bound);
  return w;
}

Mat gelu_plain(const Mat& x) {
  return x.unaryExpr([](double t) {
    return 0.5 * t * (1.0 + std::erf(t * kInvSqrt2));
  });
}

void expect_word(std::istream& is, const std::string& want,
                 const std::string& where) {
  std::string got;
  if (!(is >> got) || got != want)
    throw std::runtime_error(where + ": expected '" + want + "', got '" + got +
                             "'");
}

double read_double(std::istream& is, const std::string& where) {
  std::string tok;
  if (!(is >> tok)) throw std::runtime_error(where + ": truncated");
  return std::strtod(tok.c_str(), nullptr);
}

long read_long(std::istream& is, const std::string& where) {
  long v;
  if (!(is >> v)) throw std::runtime_error(where + ": truncated");
  return v;
}

}  // namespace

Mlp Mlp::make(int in_dim, int width, int pf_dim, int n_pf_heads, int pb_dim,
              Rng& rng) {
  if (in_dim <= 0 || width <= 0 || pf_dim <= 0 || n_pf_heads <= 0 || pb_dim <= 0)
    throw std::invalid_argument("Mlp::make: bad architecture");
  Mlp net;
  net.in_dim = in_dim;
  net.width = width;
  net.pf_dim = pf_dim;
  net.n_pf_heads = n_pf_heads;
  net.pb_dim = pb_dim;
  net.w1 = glorot(in_dim, width, rng);
  net.b1 = Mat::Zero(1, width);
  net.w2 = glorot(width, width, rng);
  net.b2 = Mat::Zero(1, width);
  net.w3 = glorot(width, width, rng);
  net.b3 = Mat::Zero(1, width);
  for (int k = 0; k < n_pf_heads; ++k) {
    net.w_pf.push_back(glorot(width, pf_dim, rng));
    net.b_pf.push_back(Mat::Zero(1, pf_dim));
  }
  net.w_pb = glorot(width, pb_dim, rng);
  net.b_pb = Mat::Zero(1, pb_dim);
  net.w_flow = glorot(width, 1, rng);
  net.b_flow = Mat::Zero(1, 1);
  return net;
}

std::vector<Mat*> Mlp::tensors() {
  std::vector<Mat*> t = {&w1, &b1, &w2, &b2, &w3, &b3};
  for (int k = 0; k < n_pf_heads; ++k) {
    t.push_back(&w_pf[k]);
    t.push_back(&b_pf[k]);
  }
  t.push_back(&w_pb);
  t.push_back(&b_pb);
  t.push_back(&w_flow);
  t.push_back(&b_flow);
  return t;
}

std::vector<const Mat*> Mlp::tensors() const {
  auto mut = const_cast<Mlp*>(this)->tensors();
  return std::vector<const Mat*>(mut.begin(), mut.end());
}

DropoutMasks make_dropout_masks(int rows, int width, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0)
    throw std::invalid_argument("dropout rate must be in [0, 1)");
  DropoutMasks masks;
  const double keep = 1.0 - p;
  for (int layer = 0; layer < 3; ++layer) {
    Mat m(rows, width);
    for (int i = 0; i < m.size(); ++i)
      m.data()[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
    masks.m.push_back(std::move(m));
  }
  return masks;
}

Mat torso_forward(const Mlp& net, const Mat& x, const DropoutMasks* masks) {
  if (x.cols() != net.in_dim)
    throw std::invalid_argument("torso_forward: input width mismatch");
  Mat h = gelu_plain((x * net.w1).rowwise() + net.b1.row(0));
  if (masks) h = h.cwiseProduct(masks->m[0]);
  h = gelu_plain((h * net.w2).rowwise() + net.b2.row(0));
  if (masks) h = h.cwiseProduct(masks->m[1]);
  h = gelu_plain((h * net.w3).rowwise() + net.b3.row(0));
  if (masks) h = h.cwiseProduct(masks->m[2]);
  return h;
}

Mat pf_forward(const Mlp& net, const Mat& h, int head) {
  return (h * net.w_pf.at(head)).rowwise() + net.b_pf.at(head).row(0);
}

Mat pb_forward(const Mlp& net, const Mat& h) {
  return (h * net.w_pb).rowwise() + net.b_pb.row(0);
}

Mat flow_forward(const Mlp& net, const Mat& h) {
  return (h * net.w_flow).rowwise() + net.b_flow.row(0);
}

MlpTape::MlpTape(Graph& g, const Mlp& n) : net(&n) {
  w1 = g.param(n.w1);
  b1 = g.param(n.b1);
  w2 = g.param(n.w2);
  b2 = g.param(n.b2);
  w3 = g.param(n.w3);
  b3 = g.param(n.b3);
  for (int k = 0; k < n.n_pf_heads; ++k) {
    w_pf.push_back(g.param(n.w_pf[k]));
    b_pf.push_back(g.param(n.b_pf[k]));
  }
  w_pb = g.param(n.w_pb);
  b_pb = g.param(n.b_pb);
  w_flow = g.param(n.w_flow);
  b_flow = g.param(n.b_flow);
}

int MlpTape::torso(Graph& g, const Mat& x, const DropoutMasks* masks) const {
  int h = g.input(x);
  h = gelu(g, add_row_bias(g, matmul(g, h, w1), b1));
  if (masks) h = mul_mat(g, h, masks->m[0]);
  h = gelu(g, add_row_bias(g, matmul(g, h, w2), b2));
  if (masks) h = mul_mat(g, h, masks->m[1]);
  h = gelu(g, add_row_bias(g, matmul(g, h, w3), b3));
  if (masks) h = mul_mat(g, h, masks->m[2]);
  return h;
}

int MlpTape::pf(Graph& g, int torso_id, int head) const {
  return add_row_bias(g, matmul(g, torso_id, w_pf.at(head)), b_pf.at(head));
}

int MlpTape::pb(Graph& g, int torso_id) const {
  return add_row_bias(g, matmul(g, torso_id, w_pb), b_pb);
}

int MlpTape::flow(Graph& g, int torso_id) const {
  return add_row_bias(g, matmul(g, torso_id, w_flow), b_flow);
}

std::vector<int> MlpTape::param_ids() const {
  std::vector<int> ids = {w1, b1, w2, b2, w3, b3};
  for (size_t k = 0; k < w_pf.size(); ++k) {
    ids.push_back(w_pf[k]);
    ids.push_back(b_pf[k]);
  }
  ids.push_back(w_pb);
  ids.push_back(b_pb);
  ids.push_back(w_flow);
  ids.push_back(b_flow);
  return ids;
}

Adam::Adam(std::vector<Ref> refs, AdamHyper hyper)
    : refs_(std::move(refs)), hyper_(hyper) {
  for (const Ref& r : refs_) {
    m_.push_back(Mat::Zero(r.tensor->rows(), r.tensor->cols()));
    v_.push_back(Mat::Zero(r.tensor->rows(), r.tensor->cols()));
  }
}

bool Adam::step(const std::vector<Mat>& grads, double schedule) {
  if (grads.size() != refs_.size())
    throw std::invalid_argument("Adam::step: gradient count mismatch");

  double sq = 0.0;
  for (const Mat& grad : grads) {
    if (!grad.allFinite()) return false;
    sq += grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  const double clip =
      norm > hyper_.clip_norm ? hyper_.clip_norm / norm : 1.0;

  ++step_;
  const double bc1 = 1.0 - std::pow(hyper_.beta1, step_);
  const double bc2 = 1.0 - std::pow(hyper_.beta2, step_);
  for (size_t i = 0; i < refs_.size(); ++i) {
    const Mat grad = clip * grads[i];
    m_[i] = hyper_.beta1 * m_[i] + (1.0 - hyper_.beta1) * grad;
    v_[i] = hyper_.beta2 * v_[i] + (1.0 - hyper_.beta2) * grad.cwiseProduct(grad);
    const double lr = refs_[i].lr0 * schedule;
    refs_[i].tensor->array() -=
        lr * (m_[i].array() / bc1) /
        ((v_[i].array() / bc2).sqrt() + hyper_.eps);
  }
  return true;
}

void save_tensor(std::ostream& os, const std::string& name, const Mat& t) {
  os << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
  os << std::setprecision(17);
  for (int r = 0; r < t.rows(); ++r) {
    for (int c = 0; c < t.cols(); ++c) os << (c ? " " : "") << t(r, c);
    os << '\n';
  }
}

Mat load_tensor(std::istream& is, const std::string& expect_name) {
  expect_word(is, "tensor", "tensor load");
  expect_word(is, expect_name, "tensor load");
  const long rows = read_long(is, "tensor load");
  const long cols = read_long(is, "tensor load");
  if (rows < 0 || cols < 0 || rows * cols > (1L << 30))
    throw std::runtime_error("tensor load: implausible shape");
  Mat t(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) t(r, c) = read_double(is, "tensor load");
  return t;
}

void Adam::save(std::ostream& os) const {
  os << "adam " << step_ << ' ' << refs_.size() << '\n';
  os << std::setprecision(17) << hyper_.beta1 << ' ' << hyper_.beta2 << ' '
     << hyper_.eps << ' ' << hyper_.clip_norm << '\n';
  for (size_t i = 0; i < refs_.size(); ++i) {
    save_tensor(os, "m" + std::to_string(i), m_[i]);
    save_tensor(os, "v" + std::to_string(i), v_[i]);
  }
}

void Adam::load(std::istream& is) {
  expect_word(is, "adam", "adam load");
  step_ = read_long(is, "adam load");
  const long n = read_long(is, "adam load");
  if (n != static_cast<long>(refs_.size()))
    throw std::runtime_error("adam load: parameter count mismatch");
  hyper_.beta1 = read_double(is, "adam load");
  hyper_.beta2 = read_double(is, "adam load");
  hyper_.eps = read_double(is, "adam load");
  hyper_.clip_norm = read_double(is, "adam load");
  for (size_t i = 0; i < refs_.size(); ++i) {
    m_[i] = load_tensor(is, "m" + std::to_string(i));
    v_[i] = load_tensor(is, "v" + std::to_string(i));
    if (m_[i].rows() != refs_[i].tensor->rows() ||
        m_[i].cols() != refs_[i].tensor->cols())
      throw std::runtime_error("adam load: moment shape mismatch");
  }
}

void save_mlp(std::ostream& os, const Mlp& net) {
  os << "mlp " << net.in_dim << ' ' << net.width << ' ' << net.pf_dim << ' '
     << net.n_pf_heads << ' ' << net.pb_dim << ' '
     << std::setprecision(17) << net.dropout << '\n';
  const auto ts = net.tensors();
  for (size_t i = 0; i < ts.size(); ++i)
    save_tensor(os, "t" + std::to_string(i), *ts[i]);
}

Mlp load_mlp(std::istream& is) {
  expect_word(is, "mlp", "mlp load");
  Mlp net;
  net.in_dim = static_cast<int>(read_long(is, "mlp load"));
  net.width = static_cast<int>(read_long(is, "mlp load"));
  net.pf_dim = static_cast<int>(read_long(is, "mlp load"));
  net.n_pf_heads = static_cast<int>(read_long(is, "mlp load"));
  net.pb_dim = static_cast<int>(read_long(is, "mlp load"));
  net.dropout = read_double(is, "mlp load");
  Rng scratch(0);
  Mlp shaped = Mlp::make(net.in_dim, net.width, net.pf_dim, net.n_pf_heads,
                         net.pb_dim, scratch);
  shaped.dropout = net.dropout;
  const auto ts = shaped.tensors();
  for (size_t i = 0; i < ts.size(); ++i)
    *ts[i] = load_tensor(is, "t" + std::to_string(i));
  return shaped;
}

}  // namespace metagfn
