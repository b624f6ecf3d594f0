#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace exfil {

enum class ServiceCategory { authentication, data, security, common };

enum class AttackComplexity { low, medium, high };

std::string_view to_string(ServiceCategory c);
std::string_view to_string(AttackComplexity c);

struct ServiceDef {
    std::string name;
    ServiceCategory category = ServiceCategory::common;

    bool operator==(const ServiceDef&) const = default;
};

struct VulnProfile {
    double base_score = 0.0;            // CVSS base score, [0, 10]
    double exploitability_score = 0.0;  // CVSS exploitability score, [0, 10]
    AttackComplexity complexity = AttackComplexity::high;

    bool operator==(const VulnProfile&) const = default;
};

struct Address {
    int subnet = 0;
    int host = 0;

    auto operator<=>(const Address&) const = default;
};

// Renders "(a, b)" as used in path reports.
std::string to_string(Address a);

struct HostConfig {
    Address address;
    std::string os;
    std::vector<std::string> services;   // sorted, unique
    std::vector<std::string> processes;  // sorted, unique
    std::map<std::string, VulnProfile> exploit_vulns;  // keyed by service
    std::map<std::string, VulnProfile> privesc_vulns;  // keyed by process
    double path_score = 0.0;

    bool operator==(const HostConfig&) const = default;
};

// Sentinel subnet id for the public internet in firewall rules.
inline constexpr int kInternet = -1;

struct FirewallRule {
    int src_subnet = 0;  // subnet id or kInternet
    int dst_subnet = 0;
    std::string service;

    bool operator==(const FirewallRule&) const = default;
};

struct SubnetDef {
    int id = 0;
    int host_count = 0;

    bool operator==(const SubnetDef&) const = default;
};

struct NetworkScenario {
    std::string id;  // not part of the document; set by the loader
    std::vector<SubnetDef> subnets;        // sorted by id
    std::vector<ServiceDef> services;      // sorted by name
    std::vector<std::string> os_set;       // sorted
    std::vector<std::string> processes;    // sorted
    std::vector<HostConfig> hosts;         // sorted by address
    std::vector<FirewallRule> firewall;    // document order
    Address initial_host;
    std::vector<Address> exit_hosts;       // sorted
    static constexpr int privilege_levels = 3;

    int host_index(Address a) const;  // -1 if undefined
    const HostConfig* find_host(Address a) const;
    const ServiceDef* find_service(std::string_view name) const;
    int subnet_index(int subnet_id) const;  // -1 if undefined
    int max_hosts_per_subnet() const;
    bool is_exit(Address a) const;

    bool operator==(const NetworkScenario&) const = default;
};

struct Violation {
    std::string code;
    std::string message;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string what, std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

struct LoadResult {
    std::optional<NetworkScenario> scenario;  // set when the document could be built
    std::vector<Violation> violations;        // empty iff the scenario is valid
};

// Builds a scenario from a parsed document and reports all violations
// instead of throwing. Unknown keys are violations (strict mode).
LoadResult load_scenario_checked(const nlohmann::json& doc, std::string id = "scenario");

// Strict loaders: throw ParseError on malformed documents and
// ValidationError when any violation is present.
NetworkScenario load_scenario(const nlohmann::json& doc, std::string id = "scenario");
NetworkScenario load_scenario_text(std::string_view text, std::string id = "scenario");
NetworkScenario load_scenario_file(const std::filesystem::path& path);

nlohmann::json serialize_scenario(const NetworkScenario& s);

std::vector<Violation> validate_scenario(const NetworkScenario& s);

// Built-in reconstruction of the 9-subnet, 26-host enterprise network.
NetworkScenario paper_scenario();
std::shared_ptr<const NetworkScenario> paper_scenario_ptr();

// True iff an allow rule (src, dst, service) exists or src == dst
// (intra-subnet traffic is always allowed). Throws std::invalid_argument
// for unknown subnet ids or services.
bool subnet_reachable(const NetworkScenario& s, int src, int dst,
                      const std::string& service);

}  // namespace exfil
