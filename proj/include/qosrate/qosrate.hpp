#pragma once

#include "qosrate/channel.hpp"
#include "qosrate/energy.hpp"
#include "qosrate/errors.hpp"
#include "qosrate/json_io.hpp"
#include "qosrate/linalg.hpp"
#include "qosrate/queuesim.hpp"
#include "qosrate/sources.hpp"
#include "qosrate/throughput.hpp"
