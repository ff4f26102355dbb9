#pragma once

#include "ffm/fd.hpp"
#include "ffm/ffm.hpp"
#include "ffm/grid.hpp"
#include "ffm/io.hpp"
#include "ffm/loss.hpp"
#include "ffm/metrics.hpp"
#include "ffm/topology.hpp"
