// Prints P1 orbits and deadbeat gains over a range of walking speeds.

#include <cstdio>

#include "hlip/hlip.hpp"

using namespace hlip;

int main() {
  const ModelParams params{1.0, kDefaultGravity, 0.3, 0.05};
  const OrbitalSlopes slopes = orbital_slopes(params);
  const SteppingGain gain = deadbeat_gain(params);
  std::printf("lambda %.4f  sigma1 %.4f  sigma2 %.4f  K = [%.4f %.4f]\n", natural_frequency(params), slopes.sigma1,
              slopes.sigma2, gain.k(0), gain.k(1));
  std::printf("%8s %8s %8s %8s\n", "v_des", "u*", "p*", "v*");
  for (int i = -6; i <= 6; ++i) {
    const double v = 0.25 * i;
    const P1Orbit o = p1_orbit(v, params);
    std::printf("%8.2f %8.4f %8.4f %8.4f\n", v, o.u_star, o.x_star.p, o.x_star.v);
  }
  // lateral P2 with a fixed step width
  const P2Orbit lat = p2_orbit(0.0, -0.2, params);
  std::printf("P2 lateral: L (%.4f, %.4f) u %.3f | R (%.4f, %.4f) u %.3f\n", lat.x_star_left.p, lat.x_star_left.v,
              lat.u_star_left, lat.x_star_right.p, lat.x_star_right.v, lat.u_star_right);
  return 0;
}
