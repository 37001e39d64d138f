#include "metagfn/langevin.hpp"

#include <cmath>
#include <stdexcept>

namespace metagfn {

void LangevinParams::validate(int dim) const {
  if (!(gamma > 0.0) || !(beta > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("LangevinParams: gamma, beta, dt must be positive");
  if (mass.size() != 0) {
    if (mass.size() != dim)
      throw std::invalid_argument("LangevinParams: mass dimension mismatch");
    if ((mass.array() <= 0.0).any())
      throw std::invalid_argument("LangevinParams: mass must be positive");
  }
}

void em_step_with_noise(WalkerState& w, const Eigen::VectorXd& force,
                        const LangevinParams& params, const Space& space,
                        const Eigen::VectorXd& noise) {
  const int d = space.dim();
  if (force.size() != d || w.x.size() != d || w.p.size() != d ||
      noise.size() != d)
    throw std::invalid_argument("em_step: dimension mismatch");
  if (!force.allFinite())
    throw std::runtime_error("em_step: non-finite force");
  params.validate(d);

  const Eigen::VectorXd v = params.mass.size() == 0
                                ? w.p
                                : Eigen::VectorXd(w.p.cwiseQuotient(params.mass));
  const double amp = std::sqrt(2.0 * params.gamma * params.dt / params.beta);
  Eigen::VectorXd x_next = w.x + v * params.dt;
  Eigen::VectorXd p_next =
      w.p + force * params.dt - params.gamma * v * params.dt + amp * noise;

  if (space.kind == SpaceKind::Torus) {
    x_next = space.wrap(x_next);
  } else {
    space.reflect(x_next, p_next);
  }
  w.x = std::move(x_next);
  w.p = std::move(p_next);
  w.t += params.dt;
}

void em_step(WalkerState& w, const Eigen::VectorXd& force,
             const LangevinParams& params, const Space& space, Rng& rng) {
  em_step_with_noise(w, force, params, space, rng.normal_vec(space.dim()));
}

}  // namespace metagfn
