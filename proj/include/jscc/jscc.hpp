#pragma once

#include "jscc/adam.hpp"
#include "jscc/baseline.hpp"
#include "jscc/channel.hpp"
#include "jscc/checkpoint.hpp"
#include "jscc/config.hpp"
#include "jscc/conv.hpp"
#include "jscc/dataio.hpp"
#include "jscc/error.hpp"
#include "jscc/experiments.hpp"
#include "jscc/flops.hpp"
#include "jscc/losses.hpp"
#include "jscc/metrics.hpp"
#include "jscc/nets.hpp"
#include "jscc/network.hpp"
#include "jscc/perceptual.hpp"
#include "jscc/pipeline.hpp"
#include "jscc/report_io.hpp"
#include "jscc/rng.hpp"
#include "jscc/runspec.hpp"
#include "jscc/tensor.hpp"
#include "jscc/trainer.hpp"
#include "jscc/visuals.hpp"
