#pragma once

#include "sdfforge/bvh.hpp"
#include "sdfforge/dataset.hpp"
#include "sdfforge/decoder.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/geometry.hpp"
#include "sdfforge/inference.hpp"
#include "sdfforge/kdtree.hpp"
#include "sdfforge/mesh_io.hpp"
#include "sdfforge/metrics.hpp"
#include "sdfforge/parallel.hpp"
#include "sdfforge/pipeline.hpp"
#include "sdfforge/sampling.hpp"
#include "sdfforge/surfacing.hpp"
#include "sdfforge/training.hpp"
