#pragma once

// Umbrella header for the dtk library.

#include "dtk/core.hpp"
#include "dtk/polynomial.hpp"
#include "dtk/distributions.hpp"
#include "dtk/setsystems.hpp"
#include "dtk/selection.hpp"
#include "dtk/mixtures.hpp"
#include "dtk/compression.hpp"
#include "dtk/pwpoly.hpp"
#include "dtk/lowerbounds.hpp"
#include "dtk/serialization.hpp"
#include "dtk/experiment.hpp"
