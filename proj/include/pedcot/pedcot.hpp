#pragma once

// Umbrella header; http_transport.hpp is separate because it pulls in the
// full HTTP stack.

#include "pedcot/config.hpp"
#include "pedcot/core.hpp"
#include "pedcot/datasets.hpp"
#include "pedcot/errors.hpp"
#include "pedcot/llm.hpp"
#include "pedcot/metrics.hpp"
#include "pedcot/parser.hpp"
#include "pedcot/pipeline.hpp"
#include "pedcot/templates.hpp"
