#pragma once

#include "dkbo/error.hpp"
#include "dkbo/random.hpp"
#include "dkbo/pool.hpp"
#include "dkbo/pool_io.hpp"
#include "dkbo/kernel.hpp"
#include "dkbo/gp.hpp"
#include "dkbo/projection.hpp"
#include "dkbo/surrogate.hpp"
#include "dkbo/fit.hpp"
#include "dkbo/separation.hpp"
#include "dkbo/deep_kernel.hpp"
#include "dkbo/acquisition.hpp"
#include "dkbo/session.hpp"
#include "dkbo/bo.hpp"
#include "dkbo/diagnostics.hpp"
#include "dkbo/synthetic.hpp"
#include "dkbo/config.hpp"
