#pragma once

#include "specrisk/comonotone.hpp"
#include "specrisk/errors.hpp"
#include "specrisk/expr.hpp"
#include "specrisk/marginal.hpp"
#include "specrisk/mmot.hpp"
#include "specrisk/multirisk.hpp"
#include "specrisk/numerics.hpp"
#include "specrisk/payout.hpp"
#include "specrisk/simplex.hpp"
#include "specrisk/spectral.hpp"
#include "specrisk/stability.hpp"
#include "specrisk/transport_lp.hpp"
