#pragma once

// Umbrella header for the solver library (the harness lives in cgm/harness/).

#include "cgm/baselines.hpp"
#include "cgm/cgm_min.hpp"
#include "cgm/cgm_vi.hpp"
#include "cgm/error.hpp"
#include "cgm/metrics.hpp"
#include "cgm/problems.hpp"
#include "cgm/qp_projection.hpp"
#include "cgm/reference_solver.hpp"
#include "cgm/rng.hpp"
#include "cgm/types.hpp"
