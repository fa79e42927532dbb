#pragma once

// Umbrella header for the delay-embedding toolkit.

#include "takens/acceptance.hpp"
#include "takens/config.hpp"
#include "takens/dynamics.hpp"
#include "takens/embedding.hpp"
#include "takens/errors.hpp"
#include "takens/geometry.hpp"
#include "takens/harness.hpp"
#include "takens/io.hpp"
#include "takens/kdtree.hpp"
#include "takens/lyapunov.hpp"
#include "takens/numformat.hpp"
#include "takens/observables.hpp"
#include "takens/prediction.hpp"
#include "takens/regularity.hpp"
#include "takens/rng.hpp"
#include "takens/sampling.hpp"
