// diarkit/diarkit.hpp: umbrella header.

#pragma once

#include "diarkit/audio_io.hpp"
#include "diarkit/augment.hpp"
#include "diarkit/cluster.hpp"
#include "diarkit/config.hpp"
#include "diarkit/corpus.hpp"
#include "diarkit/dsp.hpp"
#include "diarkit/embed.hpp"
#include "diarkit/error.hpp"
#include "diarkit/evaluate.hpp"
#include "diarkit/fft.hpp"
#include "diarkit/hungarian.hpp"
#include "diarkit/losses.hpp"
#include "diarkit/metrics.hpp"
#include "diarkit/parallel.hpp"
#include "diarkit/pipeline.hpp"
#include "diarkit/report.hpp"
#include "diarkit/synth.hpp"
#include "diarkit/train.hpp"
#include "diarkit/vad.hpp"
