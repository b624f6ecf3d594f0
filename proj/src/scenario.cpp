#include "exfilpath/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "exfilpath/paper_scenario_data.hpp"

namespace exfil {

using nlohmann::json;

std::string_view to_string(ServiceCategory c) {
    switch (c) {
        case ServiceCategory::authentication: return "authentication";
        case ServiceCategory::data: return "data";
        case ServiceCategory::security: return "security";
        case ServiceCategory::common: return "common";
    }
    return "?";
}

std::string_view to_string(AttackComplexity c) {
    switch (c) {
        case AttackComplexity::low: return "low";
        case AttackComplexity::medium: return "medium";
        case AttackComplexity::high: return "high";
    }
    return "?";
}

std::string to_string(Address a) {
    return "(" + std::to_string(a.subnet) + ", " + std::to_string(a.host) + ")";
}

ValidationError::ValidationError(std::string what, std::vector<Violation> violations)
    : std::runtime_error(std::move(what)), violations_(std::move(violations)) {}

int NetworkScenario::host_index(Address a) const {
    auto it = std::lower_bound(hosts.begin(), hosts.end(), a,
                               [](const HostConfig& h, Address addr) { return h.address < addr; });
    if (it == hosts.end() || !(it->address == a)) return -1;
    return static_cast<int>(it - hosts.begin());
}

const HostConfig* NetworkScenario::find_host(Address a) const {
    int i = host_index(a);
    return i < 0 ? nullptr : &hosts[i];
}

const ServiceDef* NetworkScenario::find_service(std::string_view name) const {
    for (const auto& s : services)
        if (s.name == name) return &s;
    return nullptr;
}

int NetworkScenario::subnet_index(int subnet_id) const {
    for (size_t i = 0; i < subnets.size(); ++i)
        if (subnets[i].id == subnet_id) return static_cast<int>(i);
    return -1;
}

int NetworkScenario::max_hosts_per_subnet() const {
    int m = 0;
    for (const auto& s : subnets) m = std::max(m, s.host_count);
    return m;
}

bool NetworkScenario::is_exit(Address a) const {
    return std::binary_search(exit_hosts.begin(), exit_hosts.end(), a);
}

namespace {

std::optional<ServiceCategory> parse_category(const std::string& s) {
    if (s == "authentication") return ServiceCategory::authentication;
    if (s == "data") return ServiceCategory::data;
    if (s == "security") return ServiceCategory::security;
    if (s == "common") return ServiceCategory::common;
    return std::nullopt;
}

std::optional<AttackComplexity> parse_complexity(const std::string& s) {
    if (s == "low") return AttackComplexity::low;
    if (s == "medium") return AttackComplexity::medium;
    if (s == "high") return AttackComplexity::high;
    return std::nullopt;
}

class DocReader {
public:
    explicit DocReader(std::vector<Violation>& out) : violations_(out) {}

    void check_keys(const json& obj, const char* where,
                    std::initializer_list<const char*> allowed) {
        if (!obj.is_object()) return;
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool known = false;
            for (const char* k : allowed)
                if (it.key() == k) { known = true; break; }
            if (!known)
                add("UnknownKey", std::string(where) + ": unknown key '" + it.key() + "'");
        }
    }

    void add(std::string code, std::string message) {
        violations_.push_back({std::move(code), std::move(message)});
    }

private:
    std::vector<Violation>& violations_;
};

// Firewall subnet fields accept a subnet id or the string "internet".
int read_endpoint(const json& v) {
    if (v.is_string()) {
        if (v.get<std::string>() == "internet") return kInternet;
        throw ParseError("firewall endpoint must be a subnet id or \"internet\"");
    }
    return v.get<int>();
}

json endpoint_to_json(int subnet) {
    if (subnet == kInternet) return json("internet");
    return json(subnet);
}

VulnProfile read_vuln(const json& v, DocReader& r, const char* where) {
    VulnProfile p;
    p.base_score = v.at("base_score").get<double>();
    p.exploitability_score = v.at("exploitability").get<double>();
    std::string c = v.at("complexity").get<std::string>();
    if (auto parsed = parse_complexity(c)) {
        p.complexity = *parsed;
    } else {
        r.add("BadComplexity", std::string(where) + ": complexity '" + c +
                                   "' is not one of low/medium/high");
    }
    return p;
}

}  // namespace

LoadResult load_scenario_checked(const json& doc, std::string id) {
    LoadResult result;
    DocReader r(result.violations);

    NetworkScenario s;
    s.id = std::move(id);

    try {
        if (!doc.is_object()) throw ParseError("scenario document must be a JSON object");
        r.check_keys(doc, "document",
                     {"subnets", "services", "os", "processes", "hosts", "firewall",
                      "initial", "exits"});

        for (const auto& sub : doc.at("subnets")) {
            r.check_keys(sub, "subnets[]", {"id", "hosts"});
            s.subnets.push_back({sub.at("id").get<int>(), sub.at("hosts").get<int>()});
        }
        std::sort(s.subnets.begin(), s.subnets.end(),
                  [](const SubnetDef& a, const SubnetDef& b) { return a.id < b.id; });

        for (const auto& svc : doc.at("services")) {
            r.check_keys(svc, "services[]", {"name", "category"});
            ServiceDef d;
            d.name = svc.at("name").get<std::string>();
            std::string cat = svc.at("category").get<std::string>();
            if (auto parsed = parse_category(cat)) {
                d.category = *parsed;
            } else {
                r.add("BadServiceCategory",
                      "service '" + d.name + "': category '" + cat + "' is not one of " +
                          "authentication/data/security/common");
            }
            s.services.push_back(std::move(d));
        }
        std::sort(s.services.begin(), s.services.end(),
                  [](const ServiceDef& a, const ServiceDef& b) { return a.name < b.name; });

        s.os_set = doc.at("os").get<std::vector<std::string>>();
        std::sort(s.os_set.begin(), s.os_set.end());
        s.processes = doc.at("processes").get<std::vector<std::string>>();
        std::sort(s.processes.begin(), s.processes.end());

        for (const auto& h : doc.at("hosts")) {
            r.check_keys(h, "hosts[]",
                         {"subnet", "id", "os", "services", "processes", "exploits",
                          "privescs", "path_score"});
            HostConfig hc;
            hc.address = {h.at("subnet").get<int>(), h.at("id").get<int>()};
            hc.os = h.at("os").get<std::string>();
            hc.services = h.at("services").get<std::vector<std::string>>();
            std::sort(hc.services.begin(), hc.services.end());
            hc.processes = h.at("processes").get<std::vector<std::string>>();
            std::sort(hc.processes.begin(), hc.processes.end());
            std::string where = "host " + to_string(hc.address);
            for (const auto& e : h.at("exploits")) {
                r.check_keys(e, "exploits[]",
                             {"service", "base_score", "exploitability", "complexity"});
                hc.exploit_vulns[e.at("service").get<std::string>()] =
                    read_vuln(e, r, where.c_str());
            }
            for (const auto& p : h.at("privescs")) {
                r.check_keys(p, "privescs[]",
                             {"process", "base_score", "exploitability", "complexity"});
                hc.privesc_vulns[p.at("process").get<std::string>()] =
                    read_vuln(p, r, where.c_str());
            }
            hc.path_score = h.at("path_score").get<double>();
            s.hosts.push_back(std::move(hc));
        }
        std::sort(s.hosts.begin(), s.hosts.end(),
                  [](const HostConfig& a, const HostConfig& b) { return a.address < b.address; });

        for (const auto& f : doc.at("firewall")) {
            r.check_keys(f, "firewall[]", {"src", "dst", "service"});
            s.firewall.push_back({read_endpoint(f.at("src")), read_endpoint(f.at("dst")),
                                  f.at("service").get<std::string>()});
        }

        const auto& init = doc.at("initial");
        r.check_keys(init, "initial", {"subnet", "id"});
        s.initial_host = {init.at("subnet").get<int>(), init.at("id").get<int>()};

        for (const auto& e : doc.at("exits")) {
            r.check_keys(e, "exits", {"subnet", "id"});
            s.exit_hosts.push_back({e.at("subnet").get<int>(), e.at("id").get<int>()});
        }
        std::sort(s.exit_hosts.begin(), s.exit_hosts.end());
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed scenario document: ") + e.what());
    }

    auto semantic = validate_scenario(s);
    result.violations.insert(result.violations.end(), semantic.begin(), semantic.end());
    result.scenario = std::move(s);
    return result;
}

NetworkScenario load_scenario(const json& doc, std::string id) {
    LoadResult r = load_scenario_checked(doc, std::move(id));
    if (!r.violations.empty()) {
        std::ostringstream oss;
        oss << "scenario failed validation with " << r.violations.size() << " violation(s): ";
        for (size_t i = 0; i < r.violations.size(); ++i) {
            if (i) oss << "; ";
            oss << r.violations[i].code;
        }
        throw ValidationError(oss.str(), std::move(r.violations));
    }
    return std::move(*r.scenario);
}

NetworkScenario load_scenario_text(std::string_view text, std::string id) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed scenario document: ") + e.what());
    }
    return load_scenario(doc, std::move(id));
}

NetworkScenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return load_scenario_text(buf.str(), path.stem().string());
}

json serialize_scenario(const NetworkScenario& s) {
    json doc;
    doc["subnets"] = json::array();
    for (const auto& sub : s.subnets)
        doc["subnets"].push_back({{"id", sub.id}, {"hosts", sub.host_count}});
    doc["services"] = json::array();
    for (const auto& svc : s.services)
        doc["services"].push_back({{"name", svc.name}, {"category", std::string(to_string(svc.category))}});
    doc["os"] = s.os_set;
    doc["processes"] = s.processes;
    doc["hosts"] = json::array();
    for (const auto& h : s.hosts) {
        json exploits = json::array();
        for (const auto& [svc, v] : h.exploit_vulns)
            exploits.push_back({{"service", svc},
                                {"base_score", v.base_score},
                                {"exploitability", v.exploitability_score},
                                {"complexity", std::string(to_string(v.complexity))}});
        json privescs = json::array();
        for (const auto& [proc, v] : h.privesc_vulns)
            privescs.push_back({{"process", proc},
                                {"base_score", v.base_score},
                                {"exploitability", v.exploitability_score},
                                {"complexity", std::string(to_string(v.complexity))}});
        doc["hosts"].push_back({{"subnet", h.address.subnet},
                                {"id", h.address.host},
                                {"os", h.os},
                                {"services", h.services},
                                {"processes", h.processes},
                                {"exploits", std::move(exploits)},
                                {"privescs", std::move(privescs)},
                                {"path_score", h.path_score}});
    }
    doc["firewall"] = json::array();
    for (const auto& f : s.firewall)
        doc["firewall"].push_back({{"src", endpoint_to_json(f.src_subnet)},
                                   {"dst", endpoint_to_json(f.dst_subnet)},
                                   {"service", f.service}});
    doc["initial"] = {{"subnet", s.initial_host.subnet}, {"id", s.initial_host.host}};
    doc["exits"] = json::array();
    for (const auto& e : s.exit_hosts)
        doc["exits"].push_back({{"subnet", e.subnet}, {"id", e.host}});
    return doc;
}

std::vector<Violation> validate_scenario(const NetworkScenario& s) {
    std::vector<Violation> v;
    auto add = [&](std::string code, std::string msg) {
        v.push_back({std::move(code), std::move(msg)});
    };

    if (s.subnets.empty()) add("EmptySubnets", "scenario defines no subnets");
    if (s.hosts.empty()) add("EmptyHosts", "scenario defines no hosts");
    if (s.firewall.empty()) add("EmptyFirewall", "scenario defines no firewall rules");

    std::set<int> subnet_ids;
    for (const auto& sub : s.subnets) {
        if (sub.id < 0) add("BadSubnetId", "subnet id " + std::to_string(sub.id) + " is negative");
        if (sub.host_count <= 0)
            add("BadSubnetHostCount",
                "subnet " + std::to_string(sub.id) + " declares a non-positive host count");
        if (!subnet_ids.insert(sub.id).second)
            add("DuplicateSubnet", "subnet id " + std::to_string(sub.id) + " defined twice");
    }

    std::set<std::string> service_names;
    for (const auto& svc : s.services)
        if (!service_names.insert(svc.name).second)
            add("DuplicateService", "service '" + svc.name + "' defined twice");
    std::set<std::string> os_names(s.os_set.begin(), s.os_set.end());
    if (os_names.size() != s.os_set.size()) add("DuplicateOs", "duplicate OS name");
    std::set<std::string> process_names(s.processes.begin(), s.processes.end());
    if (process_names.size() != s.processes.size())
        add("DuplicateProcess", "duplicate process name");

    auto check_vuln = [&](const std::string& where, const std::string& key, const VulnProfile& p) {
        if (p.base_score < 0.0 || p.base_score > 10.0 || p.exploitability_score < 0.0 ||
            p.exploitability_score > 10.0)
            add("ScoreOutOfRange", where + ": vulnerability scores for '" + key +
                                       "' must lie in [0, 10]");
    };

    std::map<int, int> seen_per_subnet;
    std::set<Address> host_addrs;
    for (const auto& h : s.hosts) {
        std::string where = "host " + to_string(h.address);
        if (!host_addrs.insert(h.address).second) add("DuplicateHost", where + " defined twice");
        int si = s.subnet_index(h.address.subnet);
        if (si < 0) {
            add("UndefinedSubnet", where + " references undefined subnet " +
                                       std::to_string(h.address.subnet));
        } else {
            if (h.address.host < 0 || h.address.host >= s.subnets[si].host_count)
                add("HostIdOutOfRange", where + ": host id outside the declared subnet size");
            seen_per_subnet[h.address.subnet]++;
        }
        if (!os_names.count(h.os))
            add("DanglingOsReference", where + " references undefined OS '" + h.os + "'");
        if (h.services.empty()) add("EmptyServices", where + " has no services");
        for (const auto& svc : h.services)
            if (!service_names.count(svc))
                add("DanglingServiceReference",
                    where + " references undefined service '" + svc + "'");
        for (const auto& p : h.processes)
            if (!process_names.count(p))
                add("DanglingProcessReference",
                    where + " references undefined process '" + p + "'");
        for (const auto& [svc, vuln] : h.exploit_vulns) {
            if (!std::binary_search(h.services.begin(), h.services.end(), svc))
                add("DanglingVulnReference",
                    where + ": exploit vulnerability on unlisted service '" + svc + "'");
            check_vuln(where, svc, vuln);
        }
        for (const auto& [proc, vuln] : h.privesc_vulns) {
            if (!std::binary_search(h.processes.begin(), h.processes.end(), proc))
                add("DanglingVulnReference",
                    where + ": privilege-escalation vulnerability on unlisted process '" + proc +
                        "'");
            check_vuln(where, proc, vuln);
        }
        if (h.path_score < 0.0) add("NegativePathScore", where + " has a negative path_score");
    }
    for (const auto& sub : s.subnets) {
        int seen = seen_per_subnet.count(sub.id) ? seen_per_subnet[sub.id] : 0;
        if (sub.host_count > 0 && seen != sub.host_count)
            add("SubnetHostCountMismatch",
                "subnet " + std::to_string(sub.id) + " declares " +
                    std::to_string(sub.host_count) + " hosts but lists " + std::to_string(seen));
    }

    std::set<std::tuple<int, int, std::string>> seen_rules;
    for (const auto& f : s.firewall) {
        std::string where = "firewall rule (" +
                            (f.src_subnet == kInternet ? "internet" : std::to_string(f.src_subnet)) +
                            " -> " +
                            (f.dst_subnet == kInternet ? "internet" : std::to_string(f.dst_subnet)) +
                            ", " + f.service + ")";
        if (f.src_subnet == kInternet && f.dst_subnet == kInternet)
            add("FirewallRuleInvalid", where + " connects internet to internet");
        if (f.src_subnet != kInternet && !subnet_ids.count(f.src_subnet))
            add("UndefinedSubnet", where + " references undefined subnet " +
                                       std::to_string(f.src_subnet));
        if (f.dst_subnet != kInternet && !subnet_ids.count(f.dst_subnet))
            add("UndefinedSubnet", where + " references undefined subnet " +
                                       std::to_string(f.dst_subnet));
        if (!service_names.count(f.service))
            add("DanglingServiceReference", where + " references undefined service");
        if (!seen_rules.insert({f.src_subnet, f.dst_subnet, f.service}).second)
            add("DuplicateRule", where + " appears twice");
    }

    if (!host_addrs.count(s.initial_host))
        add("UndefinedInitialHost",
            "initial host " + to_string(s.initial_host) + " is not a defined host");
    if (s.exit_hosts.empty()) add("NoExitHosts", "scenario defines no exit hosts");
    for (const auto& e : s.exit_hosts) {
        if (!host_addrs.count(e))
            add("UndefinedExitHost", "exit host " + to_string(e) + " is not a defined host");
        if (e == s.initial_host)
            add("InitialIsExit", "initial host " + to_string(e) + " is also an exit host");
        bool internet_rule = false;
        for (const auto& f : s.firewall)
            if ((f.src_subnet == kInternet && f.dst_subnet == e.subnet) ||
                (f.src_subnet == e.subnet && f.dst_subnet == kInternet)) {
                internet_rule = true;
                break;
            }
        if (!internet_rule)
            add("ExitUnreachableFromInternet",
                "exit host " + to_string(e) + " has no allow rule to/from the internet");
    }

    return v;
}

NetworkScenario paper_scenario() {
    return load_scenario_text(kPaperScenarioJson, "paper_enterprise");
}

std::shared_ptr<const NetworkScenario> paper_scenario_ptr() {
    return std::make_shared<const NetworkScenario>(paper_scenario());
}

bool subnet_reachable(const NetworkScenario& s, int src, int dst, const std::string& service) {
    if (src != kInternet && s.subnet_index(src) < 0)
        throw std::invalid_argument("unknown subnet id " + std::to_string(src));
    if (dst != kInternet && s.subnet_index(dst) < 0)
        throw std::invalid_argument("unknown subnet id " + std::to_string(dst));
    if (!s.find_service(service))
        throw std::invalid_argument("unknown service '" + service + "'");
    if (src == dst) return true;
    for (const auto& f : s.firewall)
        if (f.src_subnet == src && f.dst_subnet == dst && f.service == service) return true;
    return false;
}

}  // namespace exfil
