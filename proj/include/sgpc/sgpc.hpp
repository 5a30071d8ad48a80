#pragma once

#include "sgpc/adf.hpp"
#include "sgpc/dataio.hpp"
#include "sgpc/evaluate.hpp"
#include "sgpc/kernel.hpp"
#include "sgpc/losses.hpp"
#include "sgpc/model.hpp"
#include "sgpc/numerics.hpp"
#include "sgpc/rng.hpp"
#include "sgpc/selection.hpp"
#include "sgpc/siteopt.hpp"
#include "sgpc/state.hpp"
#include "sgpc/trainer.hpp"
