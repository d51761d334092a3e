#include "spbc/fixtures.hpp"

#include <stdexcept>

namespace spbc {

namespace {

Fixture make(const char* name, long P, long Q, double mu, double period, std::array<double, 16> y) {
  Fixture f;
  f.name = name;
  f.P = P;
  f.Q = Q;
  f.mu = mu;
  f.period = period;
  // listed per body as q_i then qdot_i
  for (int i = 0; i < 4; ++i) {
    f.state.q(i, 0) = y[4 * i];
    f.state.q(i, 1) = y[4 * i + 1];
    f.state.v(i, 0) = y[4 * i + 2];
    f.state.v(i, 1) = y[4 * i + 3];
  }
  return f;
}

std::vector<Fixture> build() {
  return {
      make("1", 4, 5, 1.0, 20.0,
           {-0.2997475302, 0.4125670813, 1.114760563, 0.8099231855,
            1.195555973, -0.5096218631, -0.8600513847, -0.003559696213,
            -1.011040523, 1.391577897, 0.01444607736, 0.01049661818,
            0.1152320804, -1.294523115, -0.2691552559, -0.8168601074}),
      make("2", 4, 5, 0.5, 20.0,
           {-0.03365216432, 0.04631823056, 0.8791868243, 0.6387681838,
            1.229294751, -0.7817016926, -0.904358996, -0.2059939437,
            -0.762779971, 1.049876561, -0.1893205096, -0.1375492335,
            0.3635695192, -1.410687891, -0.4753736332, -0.7964439574}),
      make("3", 4, 5, 1.5, 20.0,
           {-0.4954623785, 0.6819454601, 1.286530639, 0.93472253,
            1.17942819, -0.3292799005, -0.8390962366, 0.1359441271,
            -1.196730568, 1.647158317, 0.1671195441, 0.121421328,
            -0.05129955936, -1.223455951, -0.1300038857, -0.8400400324}),
      make("4", 7, 8, 1.0, 16.0,
           {-0.3657149699, 0.8829140403, 1.186543081, 0.4914819077,
            1.104628492, -1.169044107, -0.7831641034, 0.3494036031,
            -0.7844622398, 1.893859379, -0.09666570501, -0.04003861407,
            0.04554871816, -1.607729312, -0.3067132724, -0.8008468968}),
      make("5", 7, 8, 1.5, 16.0,
           {-0.5350773026, 1.291790881, 1.350250694, 0.5592959079,
            1.099754106, -0.9458393211, -0.7454903418, 0.4733604227,
            -0.9513025743, 2.296647577, 0.05662296548, 0.02345549633,
            -0.1088341884, -1.446452984, -0.1924254315, -0.8618613589}),
      make("6", 7, 9, 1.0, 36.0,
           {-0.27004813, 0.3218308291, 1.071180019, 0.8988296083,
            1.207641964, -0.3501521227, -0.8488458756, -0.1158622427,
            -1.072721533, 1.278419741, 0.03916771092, 0.03286635046,
            0.1351276988, -1.250098447, -0.2615018538, -0.815833716}),
  };
}

}  // namespace

const std::vector<Fixture>& fixtures() {
  static const std::vector<Fixture> table = build();
  return table;
}

const Fixture& fixture(const std::string& name) {
  for (const Fixture& f : fixtures())
    if (f.name == name) return f;
  throw std::out_of_range("unknown fixture '" + name + "'");
}

RefinedSeed refine_fixture(const Fixture& f, const ShootingSettings& settings) {
  return refine_initial_state(f.state, f.theta(), f.masses(), settings);
}

}  // namespace spbc
