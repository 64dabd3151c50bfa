#pragma once

#include "bpv/authority.hpp"
#include "bpv/ballot_codec.hpp"
#include "bpv/bigint.hpp"
#include "bpv/blindsig.hpp"
#include "bpv/board.hpp"
#include "bpv/bytes.hpp"
#include "bpv/election.hpp"
#include "bpv/error.hpp"
#include "bpv/identity.hpp"
#include "bpv/legacy.hpp"
#include "bpv/random.hpp"
#include "bpv/simulation.hpp"
#include "bpv/tally.hpp"
#include "bpv/voter.hpp"
