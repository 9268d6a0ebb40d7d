#pragma once

#include <random>

namespace bred {

template <class Rng>
AdaptedPoint random_point(const ModelSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  AdaptedPoint p;
  p.x = Vec(spec.nM);
  p.ft = Vec(spec.nV);
  for (int i = 0; i < spec.nM; ++i) p.x(i) = spec.id == 'A' ? M_PI * (1.0 + u(rng)) : 1.5 * u(rng);
  for (int a = 0; a < spec.nV; ++a) p.ft(a) = 2.0 * u(rng);
  Vec ac(spec.nG);
  if (spec.group == GroupKind::U1) {
    ac(0) = M_PI * u(rng);
  } else {
    Vec3 dir(u(rng), u(rng), u(rng));
    while (dir.norm() < 1e-3) dir = Vec3(u(rng), u(rng), u(rng));
    double r = 1.4 * std::abs(u(rng));
    ac = Vec(dir.normalized() * r);
  }
  p.a = GroupElement::from_coords(spec.group, ac);
  return p;
}

}  // namespace bred
