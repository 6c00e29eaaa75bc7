#pragma once

#include "community.hpp"
#include "error.hpp"
#include "generators.hpp"
#include "graph.hpp"
#include "interaction.hpp"
#include "kdtree.hpp"
#include "layout.hpp"
#include "netsim.hpp"
#include "protocol.hpp"
#include "random.hpp"
#include "sampler.hpp"
#include "session_hub.hpp"
#include "vec3.hpp"
