#pragma once

// Umbrella header: the full library in one include.

#include "mfac/analysis.hpp"
#include "mfac/controller.hpp"
#include "mfac/csv.hpp"
#include "mfac/edlm.hpp"
#include "mfac/errors.hpp"
#include "mfac/estimator.hpp"
#include "mfac/harness.hpp"
#include "mfac/plants.hpp"
#include "mfac/polynomial.hpp"
#include "mfac/scenario.hpp"
