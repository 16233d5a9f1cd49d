#pragma once

#include "cvxreg/blse.hpp"
#include "cvxreg/funcspace.hpp"
#include "cvxreg/geometry.hpp"
#include "cvxreg/harness.hpp"
#include "cvxreg/qp.hpp"
#include "cvxreg/rng.hpp"
#include "cvxreg/selection.hpp"
#include "cvxreg/serialize.hpp"
#include "cvxreg/sieve.hpp"
#include "cvxreg/supportfn.hpp"
