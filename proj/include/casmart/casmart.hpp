#pragma once

#include "casmart/acquisition.hpp"
#include "casmart/engine.hpp"
#include "casmart/errors.hpp"
#include "casmart/experiment.hpp"
#include "casmart/gp.hpp"
#include "casmart/kernels.hpp"
#include "casmart/metrics.hpp"
#include "casmart/normal.hpp"
#include "casmart/objectives.hpp"
#include "casmart/sampling.hpp"
#include "casmart/sobol.hpp"
#include "casmart/surprise.hpp"
