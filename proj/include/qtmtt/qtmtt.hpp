#pragma once

// Convenience header pulling in the whole library.

#include "frame.hpp"
#include "gating.hpp"
#include "io_util.hpp"
#include "map_tree.hpp"
#include "metrics.hpp"
#include "partition.hpp"
#include "partition_map.hpp"
#include "pwarp.hpp"
#include "raster_io.hpp"
#include "split_log.hpp"
#include "stats.hpp"
