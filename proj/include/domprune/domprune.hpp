#pragma once

#include "domprune/actions.hpp"
#include "domprune/config.hpp"
#include "domprune/errors.hpp"
#include "domprune/eval.hpp"
#include "domprune/extract.hpp"
#include "domprune/gateway.hpp"
#include "domprune/html.hpp"
#include "domprune/prompts.hpp"
#include "domprune/prune.hpp"
#include "domprune/scoring.hpp"
#include "domprune/text.hpp"
