#pragma once

#include "ipest/concentration.hpp"
#include "ipest/config.hpp"
#include "ipest/design.hpp"
#include "ipest/diagnostics.hpp"
#include "ipest/errors.hpp"
#include "ipest/harness.hpp"
#include "ipest/io.hpp"
#include "ipest/linalg.hpp"
#include "ipest/noise.hpp"
#include "ipest/nonordered.hpp"
#include "ipest/operators.hpp"
#include "ipest/ordered.hpp"
#include "ipest/parallel.hpp"
#include "ipest/report.hpp"
#include "ipest/solver.hpp"
#include "ipest/source.hpp"
#include "ipest/subspaces.hpp"
#include "ipest/tikhonov.hpp"
