#pragma once

#include "stiefel/brockett_census.hpp"
#include "stiefel/costs.hpp"
#include "stiefel/errors.hpp"
#include "stiefel/finite_difference.hpp"
#include "stiefel/frame.hpp"
#include "stiefel/manifold.hpp"
#include "stiefel/newton.hpp"
#include "stiefel/optimality.hpp"
#include "stiefel/oracle.hpp"
