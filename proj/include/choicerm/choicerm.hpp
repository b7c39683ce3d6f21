#pragma once

#include "choicerm/baselines.hpp"
#include "choicerm/dynamic.hpp"
#include "choicerm/fractional.hpp"
#include "choicerm/instance.hpp"
#include "choicerm/io.hpp"
#include "choicerm/lp/backend.hpp"
#include "choicerm/milp_builder.hpp"
#include "choicerm/mnl.hpp"
#include "choicerm/projection.hpp"
#include "choicerm/pwla.hpp"
#include "choicerm/sim.hpp"
#include "choicerm/static_solver.hpp"
