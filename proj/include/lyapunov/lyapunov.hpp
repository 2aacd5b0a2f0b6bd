#pragma once

// Everything except the command-line front end (lyapunov/cli.hpp).
#include "lyapunov/errors.hpp"
#include "lyapunov/exactpadic.hpp"
#include "lyapunov/forms.hpp"
#include "lyapunov/io.hpp"
#include "lyapunov/lyap.hpp"
#include "lyapunov/map_spec.hpp"
#include "lyapunov/numerics.hpp"
#include "lyapunov/periodic.hpp"
#include "lyapunov/potential.hpp"
#include "lyapunov/rmap.hpp"
#include "lyapunov/roots.hpp"
