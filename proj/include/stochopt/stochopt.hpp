#pragma once

#include "stochopt/errors.hpp"
#include "stochopt/sparse_linalg.hpp"
#include "stochopt/grid_fem.hpp"
#include "stochopt/load_scenarios.hpp"
#include "stochopt/pde_solver.hpp"
#include "stochopt/objective_gradient.hpp"
#include "stochopt/descent_optimizer.hpp"
#include "stochopt/gclosure.hpp"
#include "stochopt/metrics.hpp"
