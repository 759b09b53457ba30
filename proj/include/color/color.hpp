#pragma once

#include "color/coloring.hpp"
#include "color/error.hpp"
#include "color/estimator.hpp"
#include "color/graph.hpp"
#include "color/hom_oracle.hpp"
#include "color/lifted_graph.hpp"
#include "color/maintenance.hpp"
#include "color/plan.hpp"
#include "color/summary_io.hpp"
#include "color/synthetic.hpp"
