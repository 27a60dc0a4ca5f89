// Umbrella header for the comb-drive actuator library.
#pragma once

#include "combdrive/continuation.hpp"
#include "combdrive/core/errors.hpp"
#include "combdrive/core/parallel.hpp"
#include "combdrive/core/real.hpp"
#include "combdrive/firstorder.hpp"
#include "combdrive/flow.hpp"
#include "combdrive/hill.hpp"
#include "combdrive/model.hpp"
#include "combdrive/orbits.hpp"
#include "combdrive/period.hpp"
#include "combdrive/report.hpp"
#include "combdrive/verification.hpp"
