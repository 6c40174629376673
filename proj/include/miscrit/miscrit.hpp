#pragma once

#include "miscrit/criteria.hpp"
#include "miscrit/error.hpp"
#include "miscrit/family.hpp"
#include "miscrit/qmle.hpp"
#include "miscrit/rng.hpp"
#include "miscrit/sandwich.hpp"
#include "miscrit/search.hpp"
#include "miscrit/simlab.hpp"
