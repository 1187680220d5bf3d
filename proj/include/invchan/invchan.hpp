#pragma once

#include "invchan/circuit.hpp"
#include "invchan/continuity.hpp"
#include "invchan/delay_model.hpp"
#include "invchan/engine.hpp"
#include "invchan/errors.hpp"
#include "invchan/involution.hpp"
#include "invchan/io.hpp"
#include "invchan/signal.hpp"
#include "invchan/spf.hpp"
#include "invchan/unroll.hpp"
