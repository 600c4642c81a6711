#pragma once

#include "fardoa/crlb.hpp"
#include "fardoa/csv.hpp"
#include "fardoa/error.hpp"
#include "fardoa/estimator.hpp"
#include "fardoa/lstsq.hpp"
#include "fardoa/measurement.hpp"
#include "fardoa/montecarlo.hpp"
#include "fardoa/random.hpp"
#include "fardoa/scenario.hpp"
#include "fardoa/scenario_io.hpp"
#include "fardoa/version.hpp"
