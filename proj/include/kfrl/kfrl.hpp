#pragma once

// Umbrella header: keyframe selection (TAD), group-relative policy
// optimization machinery (KF-GRPO), and the synthetic temporal-reasoning
// environment used to exercise both end to end.

#include "kfrl/cftf.hpp"
#include "kfrl/curation.hpp"
#include "kfrl/error.hpp"
#include "kfrl/feature_sequence.hpp"
#include "kfrl/objective.hpp"
#include "kfrl/policy.hpp"
#include "kfrl/rewards.hpp"
#include "kfrl/rng.hpp"
#include "kfrl/serialize.hpp"
#include "kfrl/synth.hpp"
#include "kfrl/tad.hpp"
#include "kfrl/text_format.hpp"
#include "kfrl/trainer.hpp"
