#pragma once

// Umbrella header.

#include "assoclt/blocking.hpp"
#include "assoclt/cf.hpp"
#include "assoclt/condition_grid.hpp"
#include "assoclt/covariance.hpp"
#include "assoclt/generators.hpp"
#include "assoclt/harness.hpp"
#include "assoclt/math.hpp"
#include "assoclt/model.hpp"
#include "assoclt/report.hpp"
#include "assoclt/rng.hpp"
