#pragma once

// Everything in one include.

#include "silhar/config.hpp"
#include "silhar/default_rules.hpp"
#include "silhar/error.hpp"
#include "silhar/eval.hpp"
#include "silhar/features.hpp"
#include "silhar/geometry.hpp"
#include "silhar/image_io.hpp"
#include "silhar/localization.hpp"
#include "silhar/mask.hpp"
#include "silhar/pipeline.hpp"
#include "silhar/rac.hpp"
#include "silhar/stbpm.hpp"
#include "silhar/synth.hpp"
