#pragma once

// Umbrella header.

#include "polarballs/errors.hpp"
#include "polarballs/geometry.hpp"
#include "polarballs/predicates.hpp"
#include "polarballs/convex_polytope.hpp"
#include "polarballs/regular_triangulation.hpp"
#include "polarballs/power_diagram.hpp"
#include "polarballs/shape.hpp"
#include "polarballs/sampling.hpp"
#include "polarballs/poles.hpp"
#include "polarballs/selection.hpp"
#include "polarballs/connection.hpp"
#include "polarballs/porous.hpp"
#include "polarballs/mesh_export.hpp"
#include "polarballs/pipeline.hpp"
