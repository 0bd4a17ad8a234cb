#pragma once

#include "safn/core/binary_io.hpp"
#include "safn/core/container.hpp"
#include "safn/core/hash.hpp"
#include "safn/core/log.hpp"
#include "safn/core/random.hpp"
#include "safn/core/types.hpp"
#include "safn/corpus/ema.hpp"
#include "safn/corpus/est.hpp"
#include "safn/corpus/interchange.hpp"
#include "safn/corpus/manifest.hpp"
#include "safn/corpus/splits.hpp"
#include "safn/corpus/synth.hpp"
#include "safn/corpus/wav.hpp"
#include "safn/eval/metrics.hpp"
#include "safn/eval/plot.hpp"
#include "safn/eval/report.hpp"
#include "safn/frontend/align.hpp"
#include "safn/frontend/deltas.hpp"
#include "safn/frontend/lowpass.hpp"
#include "safn/frontend/mfcc.hpp"
#include "safn/frontend/zscore.hpp"
#include "safn/inversion/inversion.hpp"
#include "safn/nn/adam.hpp"
#include "safn/nn/checkpoint.hpp"
#include "safn/nn/gradcheck.hpp"
#include "safn/nn/layers.hpp"
#include "safn/nn/lstm.hpp"
#include "safn/nn/norm.hpp"
#include "safn/nn/param.hpp"
#include "safn/sdn/sdn.hpp"
#include "safn/training/dataset.hpp"
#include "safn/training/gradcheck_suite.hpp"
#include "safn/training/model_io.hpp"
#include "safn/training/probe.hpp"
#include "safn/training/scenario.hpp"
#include "safn/training/train.hpp"
#include "safn/cli/run_config.hpp"
#include "safn/cli/run_dir.hpp"
#include "safn/corpus/convert.hpp"
