#pragma once

#include "compass/agms.hpp"
#include "compass/catalog.hpp"
#include "compass/enumerate.hpp"
#include "compass/error.hpp"
#include "compass/estimator.hpp"
#include "compass/fast_agms.hpp"
#include "compass/join_graph.hpp"
#include "compass/merge.hpp"
#include "compass/oracle.hpp"
#include "compass/partitioned.hpp"
#include "compass/predicate.hpp"
#include "compass/query_spec.hpp"
#include "compass/rng.hpp"
#include "compass/run.hpp"
#include "compass/scan.hpp"
#include "compass/sketch_config.hpp"
#include "compass/sketch_io.hpp"
#include "compass/synth.hpp"
