#pragma once

#include "mpde/analysis.hpp"
#include "mpde/basis.hpp"
#include "mpde/circuit.hpp"
#include "mpde/galerkin.hpp"
#include "mpde/linalg.hpp"
#include "mpde/odesolver.hpp"
#include "mpde/oracle.hpp"
#include "mpde/piecewise_polynomial.hpp"
