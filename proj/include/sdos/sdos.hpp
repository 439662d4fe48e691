#pragma once

#include "sdos/adam.hpp"
#include "sdos/autodiff.hpp"
#include "sdos/dataset.hpp"
#include "sdos/diagnostics.hpp"
#include "sdos/errors.hpp"
#include "sdos/gaussian.hpp"
#include "sdos/inference.hpp"
#include "sdos/linalg.hpp"
#include "sdos/models.hpp"
#include "sdos/numerics.hpp"
#include "sdos/rng.hpp"
#include "sdos/transforms.hpp"
