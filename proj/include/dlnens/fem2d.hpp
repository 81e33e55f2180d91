#pragma once

#include "dlnens/fem2d/assembly.hpp"
#include "dlnens/fem2d/infsup.hpp"
#include "dlnens/fem2d/mesh.hpp"
#include "dlnens/fem2d/norms.hpp"
#include "dlnens/fem2d/quadrature.hpp"
#include "dlnens/fem2d/spaces.hpp"
#include "dlnens/fem2d/sparse.hpp"
