#pragma once

#include "bertrand/errors.hpp"
#include "bertrand/grid.hpp"
#include "bertrand/distributions.hpp"
#include "bertrand/automaton.hpp"
#include "bertrand/strategy.hpp"
#include "bertrand/learners.hpp"
#include "bertrand/constructions.hpp"
#include "bertrand/engine.hpp"
#include "bertrand/lp.hpp"
#include "bertrand/cce.hpp"
#include "bertrand/auditor.hpp"
#include "bertrand/experiments.hpp"
#include "bertrand/io.hpp"
