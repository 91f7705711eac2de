#pragma once

#include "stimemit/alternating_sum.hpp"
#include "stimemit/coherent.hpp"
#include "stimemit/compensated_sum.hpp"
#include "stimemit/errors.hpp"
#include "stimemit/extended_real.hpp"
#include "stimemit/fock_series.hpp"
#include "stimemit/ode.hpp"
#include "stimemit/pulses.hpp"
#include "stimemit/scatter.hpp"
#include "stimemit/stim_prob.hpp"

namespace stimemit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stimemit
