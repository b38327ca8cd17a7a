#pragma once

// Parametric surrogates: neither has a closed-form conditioning update, so
// condition() is the identity unless full refitting is switched on.
#include "bocl/nn_ensemble.hpp"
#include "bocl/random_forest.hpp"
