#pragma once

// Umbrella header.

#include "signdyn/analysis.hpp"
#include "signdyn/common.hpp"
#include "signdyn/config.hpp"
#include "signdyn/covariance.hpp"
#include "signdyn/csv.hpp"
#include "signdyn/experiment.hpp"
#include "signdyn/ingest.hpp"
#include "signdyn/noise.hpp"
#include "signdyn/ode.hpp"
#include "signdyn/rng.hpp"
#include "signdyn/schedule.hpp"
#include "signdyn/simulate.hpp"
