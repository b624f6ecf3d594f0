#pragma once

#include <nlohmann/json.hpp>

#include "exfilpath/scenario.hpp"

namespace exfil::testing {

// Smallest valid scenario: both hosts share a subnet (intra-subnet traffic
// is always allowed) so a single internet rule suffices.
inline nlohmann::json minimal_scenario_doc() {
    return nlohmann::json::parse(R"({
      "subnets": [{"id": 0, "hosts": 2}],
      "services": [{"name": "web", "category": "common"}],
      "os": ["linux"],
      "processes": ["sudo"],
      "hosts": [
        {"subnet": 0, "id": 0, "os": "linux", "services": ["web"], "processes": [],
         "exploits": [], "privescs": [], "path_score": 1.0},
        {"subnet": 0, "id": 1, "os": "linux", "services": ["web"], "processes": ["sudo"],
         "exploits": [{"service": "web", "base_score": 7.5, "exploitability": 8.6, "complexity": "low"}],
         "privescs": [{"process": "sudo", "base_score": 7.8, "exploitability": 3.9, "complexity": "low"}],
         "path_score": 2.9}
      ],
      "firewall": [{"src": 0, "dst": "internet", "service": "web"}],
      "initial": {"subnet": 0, "id": 0},
      "exits": [{"subnet": 0, "id": 1}]
    })");
}

inline NetworkScenario minimal_scenario() {
    return load_scenario(minimal_scenario_doc(), "minimal");
}

// Six hosts, two exits, solvable exactly by value iteration. The exit in
// subnet 2 is strictly better: cheaper terrain and low-complexity exploits
// along the route.
inline nlohmann::json branch_scenario_doc() {
    return nlohmann::json::parse(R"({
      "subnets": [{"id": 0, "hosts": 2}, {"id": 1, "hosts": 2}, {"id": 2, "hosts": 1}, {"id": 3, "hosts": 1}],
      "services": [
        {"name": "web", "category": "common"},
        {"name": "database", "category": "data"},
        {"name": "vpn", "category": "authentication"},
        {"name": "file_share", "category": "data"}
      ],
      "os": ["linux", "windows"],
      "processes": ["sudo", "scheduler"],
      "hosts": [
        {"subnet": 0, "id": 0, "os": "linux", "services": ["file_share"], "processes": [],
         "exploits": [], "privescs": [], "path_score": 1.0},
        {"subnet": 0, "id": 1, "os": "windows", "services": ["file_share"], "processes": ["scheduler"],
         "exploits": [{"service": "file_share", "base_score": 5.0, "exploitability": 4.0, "complexity": "medium"}],
         "privescs": [], "path_score": 1.5},
        {"subnet": 1, "id": 0, "os": "linux", "services": ["web"], "processes": [],
         "exploits": [{"service": "web", "base_score": 7.5, "exploitability": 8.6, "complexity": "low"}],
         "privescs": [], "path_score": 2.0},
        {"subnet": 1, "id": 1, "os": "linux", "services": ["database"], "processes": [],
         "exploits": [{"service": "database", "base_score": 6.0, "exploitability": 5.0, "complexity": "medium"}],
         "privescs": [], "path_score": 2.0},
        {"subnet": 2, "id": 0, "os": "linux", "services": ["web"], "processes": ["sudo"],
         "exploits": [{"service": "web", "base_score": 8.0, "exploitability": 9.0, "complexity": "low"}],
         "privescs": [{"process": "sudo", "base_score": 7.8, "exploitability": 3.9, "complexity": "low"}],
         "path_score": 2.9},
        {"subnet": 3, "id": 0, "os": "linux", "services": ["vpn"], "processes": ["sudo"],
         "exploits": [{"service": "vpn", "base_score": 8.0, "exploitability": 3.0, "complexity": "medium"}],
         "privescs": [{"process": "sudo", "base_score": 7.0, "exploitability": 3.0, "complexity": "medium"}],
         "path_score": 3.9}
      ],
      "firewall": [
        {"src": 0, "dst": 1, "service": "web"},
        {"src": 0, "dst": 1, "service": "database"},
        {"src": 1, "dst": 2, "service": "web"},
        {"src": 1, "dst": 3, "service": "vpn"},
        {"src": 2, "dst": "internet", "service": "web"},
        {"src": "internet", "dst": 2, "service": "web"},
        {"src": 3, "dst": "internet", "service": "vpn"},
        {"src": "internet", "dst": 3, "service": "vpn"}
      ],
      "initial": {"subnet": 0, "id": 0},
      "exits": [{"subnet": 2, "id": 0}, {"subnet": 3, "id": 0}]
    })");
}

inline NetworkScenario branch_scenario() {
    return load_scenario(branch_scenario_doc(), "branch");
}

// Two disjoint 2-hop routes from the initial host to a single exit.
inline nlohmann::json diamond_scenario_doc() {
    return nlohmann::json::parse(R"({
      "subnets": [{"id": 0, "hosts": 1}, {"id": 1, "hosts": 1}, {"id": 2, "hosts": 1}, {"id": 3, "hosts": 1}],
      "services": [{"name": "web", "category": "common"}, {"name": "database", "category": "data"}],
      "os": ["linux"],
      "processes": ["sudo"],
      "hosts": [
        {"subnet": 0, "id": 0, "os": "linux", "services": ["web"], "processes": [],
         "exploits": [], "privescs": [], "path_score": 1.0},
        {"subnet": 1, "id": 0, "os": "linux", "services": ["web"], "processes": [],
         "exploits": [{"service": "web", "base_score": 6.0, "exploitability": 6.0, "complexity": "low"}],
         "privescs": [], "path_score": 1.0},
        {"subnet": 2, "id": 0, "os": "linux", "services": ["database"], "processes": [],
         "exploits": [{"service": "database", "base_score": 6.0, "exploitability": 6.0, "complexity": "medium"}],
         "privescs": [], "path_score": 1.0},
        {"subnet": 3, "id": 0, "os": "linux", "services": ["web"], "processes": ["sudo"],
         "exploits": [{"service": "web", "base_score": 7.0, "exploitability": 7.0, "complexity": "low"}],
         "privescs": [{"process": "sudo", "base_score": 7.0, "exploitability": 3.0, "complexity": "low"}],
         "path_score": 2.0}
      ],
      "firewall": [
        {"src": 0, "dst": 1, "service": "web"},
        {"src": 0, "dst": 2, "service": "database"},
        {"src": 1, "dst": 3, "service": "web"},
        {"src": 2, "dst": 3, "service": "web"},
        {"src": 3, "dst": "internet", "service": "web"}
      ],
      "initial": {"subnet": 0, "id": 0},
      "exits": [{"subnet": 3, "id": 0}]
    })");
}

inline NetworkScenario diamond_scenario() {
    return load_scenario(diamond_scenario_doc(), "diamond");
}

}  // namespace exfil::testing
