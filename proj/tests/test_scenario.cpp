#include <doctest.h>

#include <nlohmann/json.hpp>

#include "exfilpath/scenario.hpp"
#include "test_helpers.hpp"

using namespace exfil;
using nlohmann::json;

namespace {

bool has_violation(const std::vector<Violation>& violations, const std::string& code) {
    for (const auto& v : violations)
        if (v.code == code) return true;
    return false;
}

}  // namespace

TEST_CASE("minimal scenario loads with two hosts and one rule") {
    NetworkScenario s = testing::minimal_scenario();
    CHECK(s.hosts.size() == 2);
    CHECK(s.firewall.size() == 1);
    CHECK(s.initial_host == Address{0, 0});
    CHECK(s.exit_hosts == std::vector<Address>{{0, 1}});
    CHECK(validate_scenario(s).empty());
}

TEST_CASE("document referencing an undefined subnet fails validation") {
    json doc = testing::minimal_scenario_doc();
    doc["hosts"][1]["subnet"] = 12;
    doc["exits"][0]["subnet"] = 12;
    LoadResult r = load_scenario_checked(doc, "bad");
    CHECK(has_violation(r.violations, "UndefinedSubnet"));
    CHECK_THROWS_AS(load_scenario(doc), ValidationError);
}

TEST_CASE("malformed json raises a parse error") {
    CHECK_THROWS_AS(load_scenario_text("{not json", "x"), ParseError);
    CHECK_THROWS_AS(load_scenario_text(R"({"subnets": 3})", "x"), ParseError);
}

TEST_CASE("paper scenario matches the published counts") {
    NetworkScenario s = paper_scenario();
    CHECK(s.subnets.size() == 9);
    CHECK(s.hosts.size() == 26);
    CHECK(s.os_set.size() == 2);
    CHECK(NetworkScenario::privilege_levels == 3);
    CHECK(s.services.size() == 9);
    CHECK(s.processes.size() == 6);
    CHECK(s.firewall.size() == 39);
    CHECK(s.initial_host == Address{6, 0});
    CHECK(s.exit_hosts == std::vector<Address>{{1, 0}, {2, 0}, {4, 0}});
    CHECK(validate_scenario(s).empty());
}

TEST_CASE("paper scenario exits are internet-reachable") {
    NetworkScenario s = paper_scenario();
    for (const Address& e : s.exit_hosts) {
        bool internet = false;
        for (const auto& f : s.firewall)
            if (f.src_subnet == kInternet ? f.dst_subnet == e.subnet
                                          : (f.src_subnet == e.subnet &&
                                             f.dst_subnet == kInternet))
                internet = true;
        CHECK(internet);
    }
}

TEST_CASE("paper scenario carries the PKI misconfiguration on (3,2)") {
    NetworkScenario s = paper_scenario();
    const HostConfig* h = s.find_host({3, 2});
    REQUIRE(h != nullptr);
    const ServiceDef* pki = s.find_service("pki");
    REQUIRE(pki != nullptr);
    CHECK(pki->category == ServiceCategory::authentication);
    CHECK(std::count(h->services.begin(), h->services.end(), "pki") == 1);
    CHECK(h->exploit_vulns.count("pki") == 1);
}

TEST_CASE("paper scenario admits every published path") {
    NetworkScenario s = paper_scenario();
    auto connected = [&](Address from, Address to) {
        const HostConfig* target = s.find_host(to);
        REQUIRE(target != nullptr);
        if (from.subnet == to.subnet) return true;
        for (const auto& svc : target->services)
            if (subnet_reachable(s, from.subnet, to.subnet, svc)) return true;
        return false;
    };
    const std::vector<std::vector<Address>> published = {
        {{6, 0}, {3, 0}, {2, 0}},
        {{6, 0}, {3, 2}, {1, 0}},
        {{6, 0}, {3, 0}, {1, 0}},
        {{6, 0}, {3, 0}, {1, 1}, {4, 0}},
        {{6, 0}, {3, 2}, {1, 0}, {4, 0}},
    };
    for (const auto& path : published)
        for (size_t i = 0; i + 1 < path.size(); ++i) CHECK(connected(path[i], path[i + 1]));
}

TEST_CASE("subnet_reachable follows the allowlist") {
    NetworkScenario s = paper_scenario();
    CHECK(subnet_reachable(s, 6, 3, "web"));
    CHECK(subnet_reachable(s, 6, 6, "file_share"));  // intra-subnet
    CHECK_FALSE(subnet_reachable(s, 6, 1, "web"));
    CHECK_THROWS_AS(subnet_reachable(s, 42, 3, "web"), std::invalid_argument);
    CHECK_THROWS_AS(subnet_reachable(s, 6, 3, "nope"), std::invalid_argument);
}

TEST_CASE("serialize/load round-trips exactly") {
    for (NetworkScenario s : {paper_scenario(), testing::minimal_scenario(),
                              testing::branch_scenario(), testing::diamond_scenario()}) {
        NetworkScenario again = load_scenario(serialize_scenario(s), s.id);
        CHECK(again == s);
    }
}

TEST_CASE("validation flags each injected violation class") {
    SUBCASE("unknown key") {
        json doc = testing::minimal_scenario_doc();
        doc["extra"] = 1;
        LoadResult r = load_scenario_checked(doc);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].code == "UnknownKey");
    }
    SUBCASE("exploit vulnerability on unlisted service") {
        json doc = testing::minimal_scenario_doc();
        doc["hosts"][0]["exploits"].push_back({{"service", "database"},
                                               {"base_score", 5.0},
                                               {"exploitability", 5.0},
                                               {"complexity", "low"}});
        doc["services"].push_back({{"name", "database"}, {"category", "data"}});
        LoadResult r = load_scenario_checked(doc);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].code == "DanglingVulnReference");
    }
    SUBCASE("exit host without an internet rule") {
        json doc = testing::minimal_scenario_doc();
        doc["firewall"][0] = {{"src", 0}, {"dst", 0}, {"service", "web"}};
        LoadResult r = load_scenario_checked(doc);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].code == "ExitUnreachableFromInternet");
    }
    SUBCASE("initial host equals an exit host") {
        json doc = testing::minimal_scenario_doc();
        doc["initial"] = {{"subnet", 0}, {"id", 1}};
        LoadResult r = load_scenario_checked(doc);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].code == "InitialIsExit");
    }
    SUBCASE("dangling service reference") {
        json doc = testing::minimal_scenario_doc();
        doc["hosts"][0]["services"] = {"nope"};
        LoadResult r = load_scenario_checked(doc);
        CHECK(has_violation(r.violations, "DanglingServiceReference"));
    }
    SUBCASE("dangling os reference") {
        json doc = testing::minimal_scenario_doc();
        doc["hosts"][0]["os"] = "plan9";
        LoadResult r = load_scenario_checked(doc);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].code == "DanglingOsReference");
    }
    SUBCASE("score out of range") {
        json doc = testing::minimal_scenario_doc();
        doc["hosts"][1]["exploits"][0]["base_score"] = 10.5;
        LoadResult r = load_scenario_checked(doc);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].code == "ScoreOutOfRange");
    }
    SUBCASE("bad complexity") {
        json doc = testing::minimal_scenario_doc();
        doc["hosts"][1]["exploits"][0]["complexity"] = "extreme";
        LoadResult r = load_scenario_checked(doc);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].code == "BadComplexity");
    }
    SUBCASE("empty services") {
        json doc = testing::minimal_scenario_doc();
        doc["hosts"][0]["services"] = json::array();
        LoadResult r = load_scenario_checked(doc);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].code == "EmptyServices");
    }
    SUBCASE("duplicate host") {
        json doc = testing::minimal_scenario_doc();
        doc["hosts"][1]["id"] = 0;
        LoadResult r = load_scenario_checked(doc);
        CHECK(has_violation(r.violations, "DuplicateHost"));
    }
    SUBCASE("subnet host count mismatch") {
        json doc = testing::minimal_scenario_doc();
        doc["subnets"][0]["hosts"] = 3;
        LoadResult r = load_scenario_checked(doc);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].code == "SubnetHostCountMismatch");
    }
    SUBCASE("undefined initial host") {
        json doc = testing::minimal_scenario_doc();
        doc["initial"] = {{"subnet", 0}, {"id", 7}};
        LoadResult r = load_scenario_checked(doc);
        CHECK(has_violation(r.violations, "UndefinedInitialHost"));
    }
    SUBCASE("duplicate firewall rule") {
        json doc = testing::minimal_scenario_doc();
        doc["firewall"].push_back(doc["firewall"][0]);
        LoadResult r = load_scenario_checked(doc);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].code == "DuplicateRule");
    }
}

TEST_CASE("struct-level mutations are caught by validate_scenario") {
    NetworkScenario s = testing::minimal_scenario();
    SUBCASE("negative path score") {
        s.hosts[0].path_score = -1.0;
        auto v = validate_scenario(s);
        REQUIRE(v.size() == 1);
        CHECK(v[0].code == "NegativePathScore");
    }
    SUBCASE("privesc on unlisted process") {
        s.hosts[0].privesc_vulns["ghost"] = {5.0, 5.0, AttackComplexity::low};
        auto v = validate_scenario(s);
        CHECK(has_violation(v, "DanglingVulnReference"));
    }
    SUBCASE("no exit hosts") {
        s.exit_hosts.clear();
        auto v = validate_scenario(s);
        CHECK(has_violation(v, "NoExitHosts"));
    }
}
