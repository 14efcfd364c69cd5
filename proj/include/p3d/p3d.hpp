#pragma once

#include "p3d/consistency/checker.hpp"
#include "p3d/core/error.hpp"
#include "p3d/core/rng.hpp"
#include "p3d/diffusion/latent.hpp"
#include "p3d/diffusion/sampler.hpp"
#include "p3d/diffusion/schedule.hpp"
#include "p3d/engine/config.hpp"
#include "p3d/engine/pipeline.hpp"
#include "p3d/geometry/collision.hpp"
#include "p3d/geometry/layout.hpp"
#include "p3d/graph/prompt.hpp"
#include "p3d/graph/scene_graph.hpp"
#include "p3d/graph/vocabulary.hpp"
#include "p3d/io/json_io.hpp"
#include "p3d/losses/losses.hpp"
#include "p3d/metrics/metrics.hpp"
#include "p3d/nn/models.hpp"
#include "p3d/optim/solver.hpp"
#include "p3d/prior/graph_features.hpp"
#include "p3d/sdf/tsdf.hpp"
