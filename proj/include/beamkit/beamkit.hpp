// beamkit/beamkit.hpp

// Copyright 2026  The beamkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "beamkit/audio_io.hpp"
#include "beamkit/beamform.hpp"
#include "beamkit/cacgmm.hpp"
#include "beamkit/error.hpp"
#include "beamkit/features.hpp"
#include "beamkit/linalg.hpp"
#include "beamkit/mask.hpp"
#include "beamkit/maskers.hpp"
#include "beamkit/metrics.hpp"
#include "beamkit/pipeline.hpp"
#include "beamkit/scenegen.hpp"
#include "beamkit/stft.hpp"
