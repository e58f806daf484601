#include "fixtures.hpp"

#include <json.hpp>

#include "stasmc/model_io.hpp"

namespace stasmc::testing {

Network from_json_text(const std::string& text) { return network_from_json(nlohmann::json::parse(text)); }

Network bernoulli(double wa, double wb) {
  nlohmann::json j = {
      {"templates",
       {{{"name", "Coin"},
         {"clocks", {"u"}},
         {"locations",
          {{{"name", "Start"}, {"invariant", {"u <= 0"}}}, {{"name", "A"}}, {{"name", "B"}}}},
         {"initial", "Start"},
         {"edges",
          {{{"source", "Start"}, {"target", "A"}, {"weight", wa}},
           {{"source", "Start"}, {"target", "B"}, {"weight", wb}}}}}}},
      {"instances", {{{"name", "B"}, {"template", "Coin"}}}}};
  return network_from_json(j);
}

Network free_clock() {
  return from_json_text(R"({
    "templates": [{"name": "Clk", "clocks": ["clk"], "locations": [{"name": "L"}], "initial": "L"}],
    "instances": [{"name": "C", "template": "Clk"}]})");
}

Network pipeline() {
  return from_json_text(R"({
    "channels": [{"name": "tick", "kind": "broadcast"}, {"name": "fin", "kind": "broadcast"},
                 {"name": "hand", "kind": "binary"}],
    "globals": [{"name": "seq", "kind": "int"}, {"name": "done", "kind": "int"}],
    "templates": [
      {"name": "Src", "clocks": ["c"],
       "locations": [{"name": "Wait", "invariant": ["c <= 60"]}], "initial": "Wait",
       "edges": [{"source": "Wait", "target": "Wait", "guard": "c >= 40", "sync": "send tick",
                  "updates": ["c = 0", "seq = seq + 1"]}]},
      {"name": "Worker", "clocks": ["w"], "vars": [{"name": "cur", "kind": "int"}],
       "locations": [{"name": "Idle"}, {"name": "Busy", "invariant": ["w <= 150"]}], "initial": "Idle",
       "edges": [{"source": "Idle", "target": "Busy", "sync": "recv tick", "updates": ["w = 0", "cur = seq"]},
                 {"source": "Busy", "target": "Idle", "guard": "w >= 20", "sync": "send fin",
                  "updates": ["done = cur"]}]}],
    "instances": [{"name": "S", "template": "Src"}, {"name": "W", "template": "Worker"}]})");
}

}  // namespace stasmc::testing
