// Steps one integer and one float SRC neuron under a constant current and
// prints the membrane trajectories side by side as CSV.

#include <iostream>

#include "srcsnn/neuron.hpp"

int main() {
  using namespace srcsnn;
  SrcParamsInt ip;
  SrcParamsFloat fp;
  SrcStateInt si;
  SrcStateFloat sf;
  std::cout << "t,h_int,hs_int,h_float,hs_float\n";
  for (int t = 0; t < 60; ++t) {
    si = src_step_int(si, 500, ip);
    sf = src_step_float(sf, 0.5, fp);
    std::cout << t << ',' << si.h << ',' << si.h_s << ',' << sf.h << ',' << sf.h_s << '\n';
  }
}
