#pragma once

#include "drsplit/errors.hpp"
#include "drsplit/space.hpp"
#include "drsplit/operators.hpp"
#include "drsplit/engine.hpp"
#include "drsplit/diagnostics.hpp"
#include "drsplit/solver.hpp"
#include "drsplit/problems.hpp"
#include "drsplit/io.hpp"
#include "drsplit/suites.hpp"
