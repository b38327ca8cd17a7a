#pragma once

#include "bocl/acq_optim.hpp"
#include "bocl/acquisition.hpp"
#include "bocl/batch.hpp"
#include "bocl/bench.hpp"
#include "bocl/box_minimizer.hpp"
#include "bocl/core_types.hpp"
#include "bocl/diagnostics.hpp"
#include "bocl/errors.hpp"
#include "bocl/gp.hpp"
#include "bocl/kernels.hpp"
#include "bocl/mq_rbf.hpp"
#include "bocl/parallel.hpp"
#include "bocl/parametric.hpp"
#include "bocl/rng.hpp"
#include "bocl/runner.hpp"
#include "bocl/stats.hpp"
#include "bocl/surrogate.hpp"
#include "bocl/theory_checks.hpp"
#include "bocl/version.hpp"
