#pragma once

#include "su2vol/errors.hpp"
#include "su2vol/algebra.hpp"
#include "su2vol/metrics.hpp"
#include "su2vol/frames.hpp"
#include "su2vol/identities.hpp"
#include "su2vol/volumes.hpp"
#include "su2vol/random.hpp"
#include "su2vol/distance.hpp"
#include "su2vol/balls.hpp"
#include "su2vol/sweep.hpp"
#include "su2vol/io.hpp"
#include "su2vol/cli.hpp"
