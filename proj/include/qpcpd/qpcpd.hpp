#pragma once

#include "qpcpd/analyze.hpp"
#include "qpcpd/charge.hpp"
#include "qpcpd/commands.hpp"
#include "qpcpd/config.hpp"
#include "qpcpd/constants.hpp"
#include "qpcpd/quadrature.hpp"
#include "qpcpd/random.hpp"
#include "qpcpd/simulate.hpp"
#include "qpcpd/trace_io.hpp"
#include "qpcpd/transport.hpp"
