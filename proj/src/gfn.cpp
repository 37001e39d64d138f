#include "metagfn/gfn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace metagfn {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

Mat encode_rows(const Environment& env, const std::vector<Eigen::VectorXd>& xs,
                int t) {
  Mat e(static_cast<int>(xs.size()), env.encoded_dim());
  for (size_t r = 0; r < xs.size(); ++r)
    e.row(static_cast<int>(r)) = env.encode(xs[r], t).transpose();
  return e;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw std::runtime_error(std::string("trajectory generation: non-finite ") +
                             what);
}

void check_head(const GfnModel& model, int head) {
  if (head < 0 || head >= model.net.n_pf_heads)
    throw std::invalid_argument("forward head index out of range");
}

// Everything a loss graph consumes as constants, extracted once per batch.
struct BatchConsts {
  int b = 0;
  Mat encoded;      // (horizon+1)*b x enc, step-major blocks
  Mat deltas[3];    // realized forward displacements, b x d
  Mat bdeltas[3];   // reverse displacements; [0] unused (Dirac)
  Mat sigma_bar;    // b x 1
  Mat log_r;        // b x 1
};

BatchConsts make_consts(const Environment& env,
                        const std::vector<Trajectory>& batch) {
  const int b = static_cast<int>(batch.size());
  const int d = env.space.dim();
  BatchConsts c;
  c.b = b;
  c.encoded.resize(4 * b, env.encoded_dim());
  for (int t = 0; t < 3; ++t) {
    c.deltas[t].resize(b, d);
    if (t > 0) c.bdeltas[t].resize(b, d);
  }
  c.sigma_bar.resize(b, 1);
  c.log_r.resize(b, 1);
  for (int r = 0; r < b; ++r) {
    const Trajectory& traj = batch[r];
    if (static_cast<int>(traj.states.size()) != env.horizon + 1)
      throw std::invalid_argument("loss: trajectory length mismatch");
    for (int t = 0; t <= 3; ++t)
      c.encoded.row(t * b + r) = env.encode(traj.states[t], t).transpose();
    for (int t = 0; t < 3; ++t) {
      c.deltas[t].row(r) =
          env.space.displacement(traj.states[t], traj.states[t + 1])
              .transpose();
      if (t > 0)
        c.bdeltas[t].row(r) =
            env.space.displacement(traj.states[t + 1], traj.states[t])
                .transpose();
    }
    c.sigma_bar(r, 0) = traj.sigma_bar;
    c.log_r(r, 0) = traj.log_r;
  }
  return c;
}

// Taped mirror of head_to_mixture + apply_noise + log_density, one mixture
// per row: raw is rows x raw_dim, x is rows x d, sbar a per-row noise
// column. Returns the rows x 1 log-density node.
int taped_mixture_logpdf(Graph& g, PolicyKind kind, int raw, const Mat& x,
                         int sbar) {
  const int K = policy_components(kind);
  const int d = policy_point_dim(kind);
  const bool vm = kind == PolicyKind::VonMises2D;
  const int s_slots = kind == PolicyKind::Gauss2D ? 3 : d;
  const int logit0 = vm ? 2 * K * d : K * d + K * s_slots;

  std::vector<int> logits;
  for (int k = 0; k < K; ++k) logits.push_back(cols(g, raw, logit0 + k, 1));
  const int lse = logsumexp(g, logits);

  std::vector<int> terms;
  for (int k = 0; k < K; ++k) {
    int term = sub(g, logits[k], lse);
    for (int j = 0; j < d; ++j) {
      const Mat xj = x.col(j);
      const int mraw = cols(g, raw, k * d + j, 1);
      if (vm) {
        const int mu = scale(g, atan_(g, mraw), 2.0);
        const int lnk = scale(
            g, sigmoid(g, cols(g, raw, K * d + k * d + j, 1)), kLnKappaHi);
        const int kroot = exp_(g, scale(g, lnk, -0.5));
        const int kap = exp_(g, scale(g, log_(g, add(g, kroot, sbar)), -2.0));
        term = add(g, term, mul(g, kap, cos_(g, sub_from(g, xj, mu))));
        term = add_const(g, sub(g, term, log_bessel_i0_(g, kap)), -kLog2Pi);
      } else {
        const double mu_lo = policy_mu_lo(kind), mu_hi = policy_mu_hi(kind);
        const double s_lo = policy_sigma_lo(kind), s_hi = policy_sigma_hi(kind);
        const int mu =
            add_const(g, scale(g, sigmoid(g, mraw), mu_hi - mu_lo), mu_lo);
        const int sraw = cols(g, raw, K * d + k * s_slots + j, 1);
        const int sigma = add(
            g, add_const(g, scale(g, sigmoid(g, sraw), s_hi - s_lo), s_lo),
            sbar);
        const int u = div(g, sub_from(g, xj, mu), sigma);
        term = add(g, term, scale(g, square(g, u), -0.5));
        term = add_const(g, sub(g, term, log_(g, sigma)), -0.5 * kLog2Pi);
      }
    }
    terms.push_back(term);
  }
  return logsumexp(g, terms);
}

// One loss graph per batch: the head-independent pieces (torso, backward
// densities, flows, reward column) are built once; per_traj_loss adds one
// forward head's residuals on top.
struct LossGraph {
  BatchConsts consts;
  Graph g;
  MlpTape tape;
  int logz = -1, sbar = -1, logr = -1;
  int hf = -1;                  // torso rows for s_0..s_2
  int logpb[3] = {-1, -1, -1};  // [0] stays -1 (Dirac)
  int flow[3] = {-1, -1, -1};   // log flow at s_0..s_2

  LossGraph(const GfnModel& model, const std::vector<Trajectory>& batch,
            bool want_flow, Rng* dropout_rng)
      : consts(make_consts(model.env, batch)), tape(g, model.net) {
    const int b = consts.b;
    const PolicyKind kind = model.env.policy_kind;
    int torso_id;
    if (dropout_rng) {
      const DropoutMasks masks = make_dropout_masks(
          4 * b, model.net.width, model.net.dropout, *dropout_rng);
      torso_id = tape.torso(g, consts.encoded, &masks);
    } else {
      torso_id = tape.torso(g, consts.encoded, nullptr);
    }
    logz = g.param(model.log_z);
    sbar = g.input(consts.sigma_bar);
    logr = g.input(consts.log_r);
    hf = rows(g, torso_id, 0, 3 * b);
    const int pb_raw = tape.pb(g, rows(g, torso_id, 2 * b, 2 * b));
    logpb[1] = taped_mixture_logpdf(g, kind, rows(g, pb_raw, 0, b),
                                    consts.bdeltas[1], sbar);
    logpb[2] = taped_mixture_logpdf(g, kind, rows(g, pb_raw, b, b),
                                    consts.bdeltas[2], sbar);
    if (want_flow) {
      const int fl = tape.flow(g, hf);
      for (int t = 0; t < 3; ++t) flow[t] = rows(g, fl, t * b, b);
    }
  }

  // per-trajectory loss column for one forward head
  int per_traj_loss(const GfnModel& model, const LossSpec& spec, int head) {
    const int b = consts.b;
    const PolicyKind kind = model.env.policy_kind;
    const int pf_raw = tape.pf(g, hf, head);
    int logpf[3];
    for (int t = 0; t < 3; ++t)
      logpf[t] = taped_mixture_logpdf(g, kind, rows(g, pf_raw, t * b, b),
                                      consts.deltas[t], sbar);

    if (spec.kind == LossKind::TB) {
      int resid = add(g, broadcast11(g, logz, b), logpf[0]);
      resid = add(g, resid, logpf[1]);
      resid = add(g, resid, logpf[2]);
      resid = sub(g, resid, logpb[1]);
      resid = sub(g, resid, logpb[2]);
      resid = sub(g, resid, logr);
      return square(g, resid);
    }

    // detailed-balance residuals; the terminal flow is the clipped log-reward
    int d_t[3];
    d_t[0] = sub(g, add(g, flow[0], logpf[0]), flow[1]);
    d_t[1] = sub(g, sub(g, add(g, flow[1], logpf[1]), flow[2]), logpb[1]);
    d_t[2] = sub(g, sub(g, add(g, flow[2], logpf[2]), logr), logpb[2]);

    if (spec.kind == LossKind::DB) {
      const int loss = add(g, square(g, d_t[0]), square(g, d_t[1]));
      return add(g, loss, square(g, d_t[2]));
    }

    // subtrajectory balance: the span (i, j) residual telescopes the
    // one-step residuals; the geometric weights appear in numerator and
    // denominator
    const double la = spec.lambda;
    if (!(la > 0.0)) throw std::invalid_argument("SubTB: lambda must be > 0");
    double denom = 0.0;
    int acc = -1;
    for (int i = 0; i < 3; ++i) {
      int span = -1;
      for (int j = i + 1; j <= 3; ++j) {
        span = span < 0 ? d_t[j - 1] : add(g, span, d_t[j - 1]);
        const double w = std::pow(la, j - i);
        denom += w;
        const int contrib = scale(g, square(g, span), w);
        acc = acc < 0 ? contrib : add(g, acc, contrib);
      }
    }
    return scale(g, acc, 1.0 / denom);
  }
};

LossOutput collect(Graph& g, const MlpTape& tape, int logz, int loss_id) {
  LossOutput out;
  out.total = g.value(loss_id)(0, 0);
  g.backward(loss_id);
  for (const int id : tape.param_ids()) out.grads.push_back(g.grad(id));
  out.grads.push_back(g.grad(logz));
  out.finite = std::isfinite(out.total);
  for (const Mat& grad : out.grads) out.finite = out.finite && grad.allFinite();
  return out;
}

LossOutput zero_output(const GfnModel& model) {
  LossOutput out;
  for (const Mat* t : model.net.tensors())
    out.grads.push_back(Mat::Zero(t->rows(), t->cols()));
  out.grads.push_back(Mat::Zero(1, 1));
  return out;
}

}  // namespace

GfnModel GfnModel::make(const Environment& env, int n_pf_heads, Rng& rng) {
  GfnModel m;
  m.env = env;
  const int raw = policy_raw_dim(env.policy_kind);
  m.net =
      Mlp::make(env.encoded_dim(), env.torso_width, raw, n_pf_heads, raw, rng);
  m.log_z = Mat::Zero(1, 1);
  return m;
}

MixtureParams forward_policy(const GfnModel& model, const Eigen::VectorXd& x,
                             int t, int head, double sigma_bar) {
  check_head(model, head);
  const Mat h =
      torso_forward(model.net, model.env.encode(x, t).transpose(), nullptr);
  const Mat raw = pf_forward(model.net, h, head);
  return apply_noise(
      model.env.policy_kind,
      head_to_mixture(model.env.policy_kind, raw.row(0).transpose()),
      sigma_bar);
}

MixtureParams backward_policy(const GfnModel& model, const Eigen::VectorXd& x,
                              int t, double sigma_bar) {
  const Mat h =
      torso_forward(model.net, model.env.encode(x, t).transpose(), nullptr);
  const Mat raw = pb_forward(model.net, h);
  return apply_noise(
      model.env.policy_kind,
      head_to_mixture(model.env.policy_kind, raw.row(0).transpose()),
      sigma_bar);
}

std::vector<Trajectory> rollout_batch(const GfnModel& model, int b, Rng& rng,
                                      double sigma_bar,
                                      const std::vector<int>* heads) {
  if (b <= 0) throw std::invalid_argument("rollout_batch: empty batch");
  if (heads && static_cast<int>(heads->size()) != b)
    throw std::invalid_argument("rollout_batch: head list size mismatch");
  const Environment& env = model.env;
  const PolicyKind kind = env.policy_kind;
  const int horizon = env.horizon;

  std::vector<Trajectory> out(b);
  std::vector<Eigen::VectorXd> xs(b, env.source);
  for (int r = 0; r < b; ++r) {
    out[r].states.reserve(horizon + 1);
    out[r].states.push_back(env.source);
    out[r].log_pf = Eigen::VectorXd::Zero(horizon);
    out[r].log_pb = Eigen::VectorXd::Zero(horizon);
    out[r].sigma_bar = sigma_bar;
    out[r].head = heads ? (*heads)[r] : 0;
    check_head(model, out[r].head);
  }

  Mat h = torso_forward(model.net, encode_rows(env, xs, 0), nullptr);
  for (int t = 0; t < horizon; ++t) {
    std::vector<Mat> praw(model.net.n_pf_heads);
    std::vector<bool> used(model.net.n_pf_heads, false);
    for (int r = 0; r < b; ++r) used[out[r].head] = true;
    for (int k = 0; k < model.net.n_pf_heads; ++k)
      if (used[k]) praw[k] = pf_forward(model.net, h, k);

    std::vector<Eigen::VectorXd> next(b);
    for (int r = 0; r < b; ++r) {
      const MixtureParams pol = apply_noise(
          kind, head_to_mixture(kind, praw[out[r].head].row(r).transpose()),
          sigma_bar);
      const Eigen::VectorXd delta = sample(kind, pol, rng);
      const double lpf = log_density(kind, pol, delta);
      check_finite(lpf, "forward density");
      out[r].log_pf[t] = lpf;
      next[r] = env.space.wrap(xs[r] + delta);
      out[r].states.push_back(next[r]);
    }

    h = torso_forward(model.net, encode_rows(env, next, t + 1), nullptr);
    if (t > 0) {
      const Mat braw = pb_forward(model.net, h);
      for (int r = 0; r < b; ++r) {
        const MixtureParams pol = apply_noise(
            kind, head_to_mixture(kind, braw.row(r).transpose()), sigma_bar);
        const double lpb =
            log_density(kind, pol, env.space.displacement(next[r], xs[r]));
        check_finite(lpb, "backward density");
        out[r].log_pb[t] = lpb;
      }
    }
    xs = std::move(next);
  }

  for (int r = 0; r < b; ++r) {
    out[r].reward = env.reward(xs[r]);
    out[r].log_r = env.log_reward(xs[r]);
  }
  return out;
}

Trajectory rollout_forward(const GfnModel& model, Rng& rng, double sigma_bar,
                           int head) {
  const std::vector<int> heads(1, head);
  return rollout_batch(model, 1, rng, sigma_bar, &heads)[0];
}

std::vector<Trajectory> backward_sample_batch(
    const GfnModel& model, const std::vector<Eigen::VectorXd>& terminals,
    Rng& rng, double sigma_bar) {
  if (terminals.empty())
    throw std::invalid_argument("backward_sample_batch: no terminals");
  const Environment& env = model.env;
  const PolicyKind kind = env.policy_kind;
  const int b = static_cast<int>(terminals.size());

  std::vector<Trajectory> out(b);
  std::vector<std::vector<Eigen::VectorXd>> states(
      4, std::vector<Eigen::VectorXd>(b));
  for (int r = 0; r < b; ++r) {
    states[3][r] = terminals[r];
    out[r].log_pf = Eigen::VectorXd::Zero(env.horizon);
    out[r].log_pb = Eigen::VectorXd::Zero(env.horizon);
  }

  // walk back: s_2 from the policy at s_3, then s_1 from the policy at s_2;
  // s_0 is the forced Dirac jump to the source
  const Mat h3 =
      torso_forward(model.net, encode_rows(env, states[3], 3), nullptr);
  const Mat braw3 = pb_forward(model.net, h3);
  for (int r = 0; r < b; ++r) {
    const MixtureParams pol = apply_noise(
        kind, head_to_mixture(kind, braw3.row(r).transpose()), sigma_bar);
    const Eigen::VectorXd delta = sample(kind, pol, rng);
    const double lpb = log_density(kind, pol, delta);
    check_finite(lpb, "backward density");
    out[r].log_pb[2] = lpb;
    states[2][r] = env.space.wrap(states[3][r] + delta);
  }

  const Mat h2 =
      torso_forward(model.net, encode_rows(env, states[2], 2), nullptr);
  const Mat braw2 = pb_forward(model.net, h2);
  for (int r = 0; r < b; ++r) {
    const MixtureParams pol = apply_noise(
        kind, head_to_mixture(kind, braw2.row(r).transpose()), sigma_bar);
    const Eigen::VectorXd delta = sample(kind, pol, rng);
    const double lpb = log_density(kind, pol, delta);
    check_finite(lpb, "backward density");
    out[r].log_pb[1] = lpb;
    states[1][r] = env.space.wrap(states[2][r] + delta);
    states[0][r] = env.source;
  }

  // forward densities along the realized path; h2 is reused for t = 2
  Mat e01(2 * b, env.encoded_dim());
  e01.topRows(b) = encode_rows(env, states[0], 0);
  e01.bottomRows(b) = encode_rows(env, states[1], 1);
  const Mat h01 = torso_forward(model.net, e01, nullptr);
  for (int t = 0; t < 3; ++t) {
    Mat raw;
    if (t == 0)
      raw = pf_forward(model.net, h01.topRows(b), 0);
    else if (t == 1)
      raw = pf_forward(model.net, h01.bottomRows(b), 0);
    else
      raw = pf_forward(model.net, h2, 0);
    for (int r = 0; r < b; ++r) {
      const MixtureParams pol = apply_noise(
          kind, head_to_mixture(kind, raw.row(r).transpose()), sigma_bar);
      const double lpf = log_density(
          kind, pol, env.space.displacement(states[t][r], states[t + 1][r]));
      check_finite(lpf, "forward density");
      out[r].log_pf[t] = lpf;
    }
  }

  for (int r = 0; r < b; ++r) {
    out[r].states.reserve(4);
    for (int t = 0; t <= 3; ++t) out[r].states.push_back(states[t][r]);
    out[r].reward = env.reward(states[3][r]);
    out[r].log_r = env.log_reward(states[3][r]);
    out[r].sigma_bar = sigma_bar;
  }
  return out;
}

Trajectory backward_sample(const GfnModel& model,
                           const Eigen::VectorXd& terminal, Rng& rng,
                           double sigma_bar) {
  return backward_sample_batch(model, {terminal}, rng, sigma_bar)[0];
}

double tb_residual(const GfnModel& model, const Trajectory& traj) {
  const Environment& env = model.env;
  const PolicyKind kind = env.policy_kind;
  double acc = model.log_z(0, 0) - traj.log_r;
  for (int t = 0; t < env.horizon; ++t) {
    const MixtureParams pf =
        forward_policy(model, traj.states[t], t, traj.head, traj.sigma_bar);
    acc += log_density(
        kind, pf, env.space.displacement(traj.states[t], traj.states[t + 1]));
    if (t > 0) {
      const MixtureParams pb =
          backward_policy(model, traj.states[t + 1], t + 1, traj.sigma_bar);
      acc -= log_density(
          kind, pb,
          env.space.displacement(traj.states[t + 1], traj.states[t]));
    }
  }
  return acc;
}

LossOutput gfn_loss(const GfnModel& model, const std::vector<Trajectory>& batch,
                    const LossSpec& spec, Rng* dropout_rng, int head) {
  if (batch.empty()) throw std::invalid_argument("gfn_loss: empty batch");
  check_head(model, head);
  LossGraph lg(model, batch, spec.kind != LossKind::TB, dropout_rng);
  const int ptl = lg.per_traj_loss(model, spec, head);
  const int total = sum_all(lg.g, ptl);
  return collect(lg.g, lg.tape, lg.logz, total);
}

LossOutput thompson_loss(const GfnModel& model,
                         const std::vector<Trajectory>& batch,
                         const LossSpec& spec, double p, Rng& rng,
                         bool train_mode) {
  if (batch.empty()) throw std::invalid_argument("thompson_loss: empty batch");
  if (!(p > 0.0) || p > 1.0)
    throw std::invalid_argument("thompson_loss: p must be in (0, 1]");
  const int b = static_cast<int>(batch.size());
  const int K = model.net.n_pf_heads;

  // trajectory-major inclusion coins
  Mat coins = Mat::Zero(b, K);
  bool any = false;
  for (int r = 0; r < b; ++r)
    for (int k = 0; k < K; ++k) {
      coins(r, k) = rng.uniform() < p ? 1.0 : 0.0;
      any = any || coins(r, k) > 0.0;
    }
  if (!any) return zero_output(model);

  Rng mask_rng = rng.child("thompson_dropout");
  LossGraph lg(model, batch, spec.kind != LossKind::TB,
               train_mode ? &mask_rng : nullptr);
  int total = -1;
  for (int k = 0; k < K; ++k) {
    if (coins.col(k).sum() == 0.0) continue;
    const int ptl = lg.per_traj_loss(model, spec, k);
    const int masked = sum_all(lg.g, mul_mat(lg.g, ptl, coins.col(k)));
    total = total < 0 ? masked : add(lg.g, total, masked);
  }
  return collect(lg.g, lg.tape, lg.logz, total);
}

}  // namespace metagfn
