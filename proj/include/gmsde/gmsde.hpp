#pragma once

#include "gmsde/rng.hpp"
#include "gmsde/gexp.hpp"
#include "gmsde/gbm.hpp"
#include "gmsde/convex.hpp"
#include "gmsde/coeffs.hpp"
#include "gmsde/solver.hpp"
#include "gmsde/harness.hpp"
#include "gmsde/config.hpp"
#include "gmsde/report.hpp"
#include "gmsde/checks.hpp"
#include "gmsde/commands.hpp"
