#pragma once
// Small networks shared by unit and acceptance tests.

#include <string>

#include "stasmc/sta.hpp"

namespace stasmc::testing {

Network from_json_text(const std::string& text);

// One instance "B" that picks edge "a" (weight wa) or "b" (weight wb) out of
// location Start at time 0 and then stops in A or B.
Network bernoulli(double wa, double wb);

// A single instance "C" with clock clk at rate 1 and no edges.
Network free_clock();

// Source "S" broadcasts tick every 40-60 ms and numbers it in global seq;
// worker "W" takes a tick when idle, works 20-150 ms and broadcasts fin
// with the job number in global done. Ticks arriving while busy are lost.
Network pipeline();

}  // namespace stasmc::testing
