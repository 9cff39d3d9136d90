#ifndef RSHARE_HPP
#define RSHARE_HPP

#include "rshare/numerics.hpp"
#include "rshare/piecewise.hpp"
#include "rshare/rng.hpp"
#include "rshare/market_model.hpp"
#include "rshare/contract_state.hpp"
#include "rshare/sde_engine.hpp"
#include "rshare/collateral.hpp"
#include "rshare/objective.hpp"
#include "rshare/pricing.hpp"
#include "rshare/margin_analysis.hpp"
#include "rshare/config.hpp"
#include "rshare/verify.hpp"
#include "rshare/commands.hpp"

#endif  // RSHARE_HPP
