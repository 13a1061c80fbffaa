#pragma once

#include "lassodof/errors.hpp"
#include "lassodof/linalg.hpp"
#include "lassodof/penalties.hpp"
#include "lassodof/problem.hpp"
#include "lassodof/sets.hpp"
#include "lassodof/solver.hpp"
#include "lassodof/dof.hpp"
#include "lassodof/geometry.hpp"
#include "lassodof/stein.hpp"
