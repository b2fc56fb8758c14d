#pragma once

// Umbrella header: scene decomposition, relation statistics, graph sampling,
// loss evaluation, layout optimization, and the pipeline configuration.

#include "orgsynth/boxquery.hpp"
#include "orgsynth/cloud.hpp"
#include "orgsynth/completion.hpp"
#include "orgsynth/config.hpp"
#include "orgsynth/convex.hpp"
#include "orgsynth/embed.hpp"
#include "orgsynth/error.hpp"
#include "orgsynth/kdtree.hpp"
#include "orgsynth/layout.hpp"
#include "orgsynth/losses.hpp"
#include "orgsynth/math.hpp"
#include "orgsynth/obb.hpp"
#include "orgsynth/optimize.hpp"
#include "orgsynth/org.hpp"
#include "orgsynth/plane.hpp"
#include "orgsynth/ply.hpp"
#include "orgsynth/relations.hpp"
#include "orgsynth/repository.hpp"
#include "orgsynth/stats.hpp"
#include "orgsynth/taxonomy.hpp"
