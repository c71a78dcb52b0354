#pragma once

#include "nac/approximator.hpp"
#include "nac/baselines.hpp"
#include "nac/common.hpp"
#include "nac/embeddings.hpp"
#include "nac/generators.hpp"
#include "nac/graph_env.hpp"
#include "nac/harness.hpp"
#include "nac/metrics.hpp"
#include "nac/node2vec.hpp"
#include "nac/ranking.hpp"
#include "nac/spectral.hpp"
#include "nac/trainer.hpp"
