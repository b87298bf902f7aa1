#include <cmath>

#include "loopsim/protocols.hpp"

namespace loopsim {

double rate_model(double rep_rate_hz, double acceptance_fraction, double herald_eta, int sources_per_event) {
    if (rep_rate_hz < 0.0 || acceptance_fraction < 0.0 || herald_eta < 0.0 || sources_per_event < 0)
        throw InvalidArgument("rate_model inputs must be nonnegative");
    double eta = 1.0;
    for (int k = 0; k < sources_per_event; ++k) eta *= herald_eta;
    return rep_rate_hz * acceptance_fraction * eta;
}

}  // namespace loopsim
