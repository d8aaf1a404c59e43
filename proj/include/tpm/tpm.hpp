#pragma once

#include "tpm/bench.hpp"
#include "tpm/convert.hpp"
#include "tpm/dot.hpp"
#include "tpm/engine.hpp"
#include "tpm/error.hpp"
#include "tpm/graph.hpp"
#include "tpm/model.hpp"
#include "tpm/opm.hpp"
#include "tpm/query/ast.hpp"
#include "tpm/query/eval.hpp"
#include "tpm/query/parser.hpp"
#include "tpm/query/printer.hpp"
#include "tpm/query/time_semantics.hpp"
#include "tpm/reachability.hpp"
#include "tpm/result_format.hpp"
#include "tpm/synthetic.hpp"
#include "tpm/tpm_format.hpp"
#include "tpm/workspace.hpp"
