#pragma once

#include "crown/error.hpp"
#include "crown/rng.hpp"
#include "crown/lie_core.hpp"
#include "crown/weyl_hull.hpp"
#include "crown/iwasawa.hpp"
#include "crown/parallel.hpp"
#include "crown/report.hpp"
#include "crown/convexity.hpp"
#include "crown/domains.hpp"
#include "crown/siegel.hpp"
