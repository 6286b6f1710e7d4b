#pragma once

#include "hgeo/arrivals.hpp"
#include "hgeo/effdist.hpp"
#include "hgeo/error.hpp"
#include "hgeo/ingest.hpp"
#include "hgeo/io.hpp"
#include "hgeo/metapop.hpp"
#include "hgeo/region_graph.hpp"
#include "hgeo/source_infer.hpp"
